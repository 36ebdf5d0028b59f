//! Reader and writer for the free-field, comma-separated structural input.
//!
//! ```text
//! $ comment
//! GRID,<id>,<x>,<y>,<z>
//! MODE,<index>,<omega_rad_s>
//! <node_id>,<t1>,<t2>,<t3>,<r1>,<r2>,<r3>      (one row per node)
//! GENMASS,<n>                                  (also GENSTIF / GENDAMP)
//! <n rows of n entries>
//! DAMP,<mode_index>,<xi>
//! ```
//!
//! Mode rows with only three translational entries are accepted and padded
//! with zero rotations. Numeric fields accept the punch-file exponent
//! shorthand (`1.0-3` for `1.0e-3`).

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, Vector3};

use super::model::{DampingSpec, Node, StructuralModel, DOFS_PER_NODE};
use crate::error::{Error, Result};

/// One comma-separated field with its 1-based starting column.
#[derive(Debug, Clone, Copy)]
struct Field<'a> {
    text: &'a str,
    column: usize,
}

fn split_fields(line: &str) -> Vec<Field<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    for piece in line.split(',') {
        let leading = piece.len() - piece.trim_start().len();
        out.push(Field {
            text: piece.trim(),
            column: line[..start].chars().count() + leading + 1,
        });
        start += piece.len() + 1;
    }
    out
}

/// Parses a real number, accepting the Nastran exponent shorthand.
pub fn parse_real(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    let value = match t.parse::<f64>() {
        Ok(v) => Some(v),
        Err(_) => {
            let bytes = t.as_bytes();
            let split = (1..bytes.len()).rev().find(|&i| {
                (bytes[i] == b'+' || bytes[i] == b'-')
                    && !matches!(bytes[i - 1], b'e' | b'E' | b'+' | b'-')
            })?;
            let fixed = format!("{}e{}", &t[..split], &t[split..]);
            fixed.parse::<f64>().ok()
        }
    }?;
    // Reject "inf" / "nan" spellings: every stored value must be finite.
    value.is_finite().then_some(value)
}

fn real(line: usize, field: &Field<'_>) -> Result<f64> {
    parse_real(field.text)
        .ok_or_else(|| Error::parse(line, field.column, format!("expected a real number, found '{}'", field.text)))
}

fn integer(line: usize, field: &Field<'_>) -> Result<i64> {
    field
        .text
        .parse::<i64>()
        .map_err(|_| Error::parse(line, field.column, format!("expected an integer, found '{}'", field.text)))
}

fn expect_fields(line: usize, fields: &[Field<'_>], count: usize, card: &str) -> Result<()> {
    if fields.len() != count {
        let column = fields.get(count.min(fields.len().saturating_sub(1))).map_or(1, |f| f.column);
        return Err(Error::parse(
            line,
            column,
            format!("{card} card takes {} fields, found {}", count - 1, fields.len() - 1),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MatrixKind {
    Mass,
    Stiffness,
    Damping,
}

impl MatrixKind {
    fn card(self) -> &'static str {
        match self {
            MatrixKind::Mass => "GENMASS",
            MatrixKind::Stiffness => "GENSTIF",
            MatrixKind::Damping => "GENDAMP",
        }
    }
}

struct ModeBlock {
    index: i64,
    frequency: f64,
    line: usize,
    rows: Vec<(i64, [f64; DOFS_PER_NODE], usize, usize)>,
}

struct MatrixBlock {
    kind: MatrixKind,
    size: usize,
    line: usize,
    rows: Vec<Vec<f64>>,
}

enum Block {
    None,
    Mode(ModeBlock),
    Matrix(MatrixBlock),
}

fn is_card(text: &str) -> bool {
    text.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
}

/// Parses the structural input into a validated [`StructuralModel`].
pub fn parse_structural_model(text: &str) -> Result<StructuralModel> {
    let mut nodes: Vec<(Node, usize)> = Vec::new();
    let mut modes: Vec<ModeBlock> = Vec::new();
    let mut matrices: Vec<MatrixBlock> = Vec::new();
    let mut damp: Vec<(i64, f64, usize, usize)> = Vec::new();
    let mut block = Block::None;

    let close = |block: &mut Block, modes: &mut Vec<ModeBlock>, matrices: &mut Vec<MatrixBlock>| -> Result<()> {
        match std::mem::replace(block, Block::None) {
            Block::None => {}
            Block::Mode(m) => modes.push(m),
            Block::Matrix(m) => {
                if m.rows.len() != m.size {
                    return Err(Error::parse(
                        m.line,
                        1,
                        format!("{} block declares {} rows, found {}", m.kind.card(), m.size, m.rows.len()),
                    ));
                }
                matrices.push(m);
            }
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('$') {
            continue;
        }
        let fields = split_fields(raw);
        let head = fields[0];

        if let Block::Matrix(m) = &mut block {
            if m.rows.len() < m.size {
                if fields.len() != m.size {
                    return Err(Error::parse(
                        line_no,
                        head.column,
                        format!("{} row must have {} entries, found {}", m.kind.card(), m.size, fields.len()),
                    ));
                }
                let row = fields.iter().map(|f| real(line_no, f)).collect::<Result<Vec<_>>>()?;
                m.rows.push(row);
                continue;
            }
        }

        if !is_card(head.text) {
            let Block::Mode(m) = &mut block else {
                return Err(Error::parse(line_no, head.column, "data row outside of a MODE or matrix block"));
            };
            let id = integer(line_no, &head)?;
            let mut row = [0.0; DOFS_PER_NODE];
            match fields.len() {
                7 | 4 => {
                    for (k, f) in fields[1..].iter().enumerate() {
                        row[k] = real(line_no, f)?;
                    }
                }
                n => {
                    let column = fields.last().map_or(1, |f| f.column);
                    return Err(Error::parse(
                        line_no,
                        column,
                        format!("mode vector length mismatch: expected 3 or 6 components, found {}", n - 1),
                    ));
                }
            }
            if m.rows.iter().any(|r| r.0 == id) {
                return Err(Error::parse(line_no, head.column, format!("node {id} repeated in MODE {}", m.index)));
            }
            m.rows.push((id, row, line_no, head.column));
            continue;
        }

        close(&mut block, &mut modes, &mut matrices)?;
        match head.text.to_ascii_uppercase().as_str() {
            "GRID" => {
                expect_fields(line_no, &fields, 5, "GRID")?;
                let id = integer(line_no, &fields[1])?;
                let p = Vector3::new(
                    real(line_no, &fields[2])?,
                    real(line_no, &fields[3])?,
                    real(line_no, &fields[4])?,
                );
                if nodes.iter().any(|(n, _)| n.id == id) {
                    return Err(Error::parse(line_no, fields[1].column, format!("duplicate node id {id}")));
                }
                nodes.push((Node { id, position: p }, line_no));
            }
            "MODE" => {
                expect_fields(line_no, &fields, 3, "MODE")?;
                let index = integer(line_no, &fields[1])?;
                let frequency = real(line_no, &fields[2])?;
                if frequency < 0.0 {
                    return Err(Error::parse(line_no, fields[2].column, "modal frequency must be non-negative"));
                }
                if modes.iter().any(|m| m.index == index) {
                    return Err(Error::parse(line_no, fields[1].column, format!("duplicate MODE index {index}")));
                }
                block = Block::Mode(ModeBlock {
                    index,
                    frequency,
                    line: line_no,
                    rows: Vec::new(),
                });
            }
            card @ ("GENMASS" | "GENSTIF" | "GENDAMP") => {
                let kind = match card {
                    "GENMASS" => MatrixKind::Mass,
                    "GENSTIF" => MatrixKind::Stiffness,
                    _ => MatrixKind::Damping,
                };
                expect_fields(line_no, &fields, 2, card)?;
                let size = integer(line_no, &fields[1])?;
                if size < 1 {
                    return Err(Error::parse(line_no, fields[1].column, "matrix size must be positive"));
                }
                if matrices.iter().any(|m| m.kind == kind) {
                    return Err(Error::parse(line_no, head.column, format!("{card} given twice")));
                }
                block = Block::Matrix(MatrixBlock {
                    kind,
                    size: size as usize,
                    line: line_no,
                    rows: Vec::new(),
                });
            }
            "DAMP" => {
                expect_fields(line_no, &fields, 3, "DAMP")?;
                let index = integer(line_no, &fields[1])?;
                let xi = real(line_no, &fields[2])?;
                if xi < 0.0 {
                    return Err(Error::parse(line_no, fields[2].column, "damping ratio must be non-negative"));
                }
                damp.push((index, xi, line_no, fields[1].column));
            }
            other => {
                return Err(Error::parse(line_no, head.column, format!("unknown card '{other}'")));
            }
        }
    }
    close(&mut block, &mut modes, &mut matrices)?;

    assemble(nodes, modes, matrices, damp)
}

fn assemble(
    nodes: Vec<(Node, usize)>,
    mut modes: Vec<ModeBlock>,
    matrices: Vec<MatrixBlock>,
    damp: Vec<(i64, f64, usize, usize)>,
) -> Result<StructuralModel> {
    if nodes.is_empty() {
        return Err(Error::parse(1, 1, "no GRID cards found"));
    }
    if modes.is_empty() {
        return Err(Error::parse(1, 1, "no MODE blocks found"));
    }
    modes.sort_by_key(|m| m.index);
    let n = modes.len();
    for (k, m) in modes.iter().enumerate() {
        if m.index != k as i64 + 1 {
            return Err(Error::parse(
                m.line,
                1,
                format!("MODE indices must run 1..{n} without gaps, found {}", m.index),
            ));
        }
    }

    let node_index: HashMap<i64, usize> = nodes.iter().enumerate().map(|(i, (nd, _))| (nd.id, i)).collect();
    let mut u = DMatrix::zeros(DOFS_PER_NODE * nodes.len(), n);
    for (col, m) in modes.iter().enumerate() {
        for (id, row, line, column) in &m.rows {
            let Some(&i) = node_index.get(id) else {
                return Err(Error::parse(*line, *column, format!("MODE {} references unknown node {id}", m.index)));
            };
            for (k, v) in row.iter().enumerate() {
                u[(i * DOFS_PER_NODE + k, col)] = *v;
            }
        }
        if m.rows.len() != nodes.len() {
            return Err(Error::parse(
                m.line,
                1,
                format!(
                    "mode vector length mismatch: MODE {} gives {} node rows, model has {} nodes",
                    m.index,
                    m.rows.len(),
                    nodes.len()
                ),
            ));
        }
    }

    let frequencies: Vec<f64> = modes.iter().map(|m| m.frequency).collect();
    let mut mass = None;
    let mut stiffness = None;
    let mut damping_matrix = None;
    for m in matrices {
        if m.size != n {
            return Err(Error::parse(
                m.line,
                1,
                format!("{} is {}x{} but the model has {n} modes", m.kind.card(), m.size, m.size),
            ));
        }
        let mat = DMatrix::from_fn(n, n, |r, c| m.rows[r][c]);
        match m.kind {
            MatrixKind::Mass => mass = Some(mat),
            MatrixKind::Stiffness => stiffness = Some(mat),
            MatrixKind::Damping => damping_matrix = Some(mat),
        }
    }

    let damping = match damping_matrix {
        Some(c) => {
            if let Some((_, _, line, column)) = damp.first() {
                return Err(Error::parse(*line, *column, "DAMP cannot be combined with GENDAMP"));
            }
            DampingSpec::Matrix(c)
        }
        None => {
            let mut ratios = vec![0.0; n];
            for (index, xi, line, column) in damp {
                if index < 1 || index as usize > n {
                    return Err(Error::parse(line, column, format!("DAMP references mode {index}, model has {n}")));
                }
                ratios[index as usize - 1] = xi;
            }
            DampingSpec::Ratios(ratios)
        }
    };

    let nodes: Vec<Node> = nodes.into_iter().map(|(nd, _)| nd).collect();
    let diagonal = mass.is_none() && stiffness.is_none();
    let mass = mass.unwrap_or_else(|| DMatrix::identity(n, n));
    let stiffness = stiffness.unwrap_or_else(|| {
        DMatrix::from_fn(n, n, |r, c| if r == c { frequencies[r] * frequencies[r] } else { 0.0 })
    });
    let model = StructuralModel {
        nodes,
        modes: u,
        frequencies,
        mass,
        stiffness,
        damping,
        diagonal,
    };
    model.validate()?;
    Ok(model)
}

/// Serializes a model in the same dialect; the output parses back to an
/// identical model.
pub fn write_structural_model(model: &StructuralModel) -> String {
    let mut out = String::new();
    let n = model.n_modes();
    out.push_str("$ aerocouple structural model\n");
    for node in &model.nodes {
        let p = node.position;
        let _ = writeln!(out, "GRID,{},{:?},{:?},{:?}", node.id, p.x, p.y, p.z);
    }
    for col in 0..n {
        let _ = writeln!(out, "MODE,{},{:?}", col + 1, model.frequencies[col]);
        for (i, node) in model.nodes.iter().enumerate() {
            let _ = write!(out, "{}", node.id);
            for k in 0..DOFS_PER_NODE {
                let _ = write!(out, ",{:?}", model.modes[(i * DOFS_PER_NODE + k, col)]);
            }
            out.push('\n');
        }
    }
    let write_matrix = |out: &mut String, card: &str, m: &DMatrix<f64>| {
        let _ = writeln!(out, "{card},{n}");
        for r in 0..n {
            let row: Vec<String> = (0..n).map(|c| format!("{:?}", m[(r, c)])).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
    };
    if !model.diagonal {
        write_matrix(&mut out, "GENMASS", &model.mass);
        write_matrix(&mut out, "GENSTIF", &model.stiffness);
    }
    match &model.damping {
        DampingSpec::Matrix(c) => write_matrix(&mut out, "GENDAMP", c),
        DampingSpec::Ratios(r) => {
            for (i, xi) in r.iter().enumerate() {
                if *xi != 0.0 {
                    let _ = writeln!(out, "DAMP,{},{:?}", i + 1, xi);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_degenerate_mode() {
        let text = "GRID,1,0.0,0.0,0.0\nMODE,1,0.0\n1,0,0,0,0,0,0\n";
        let m = parse_structural_model(text).unwrap();
        assert_eq!(m.n_modes(), 1);
        assert_eq!(m.modes.shape(), (6, 1));
        assert!(m.modes.iter().all(|v| *v == 0.0));
        assert!(m.diagonal);
    }

    #[test]
    fn nastran_exponent_shorthand() {
        assert_eq!(parse_real("1.0-3"), Some(1.0e-3));
        assert_eq!(parse_real("-1.5+2"), Some(-150.0));
        assert_eq!(parse_real("2.5E-1"), Some(0.25));
        assert_eq!(parse_real(".5"), Some(0.5));
        assert_eq!(parse_real("abc"), None);
        assert_eq!(parse_real("inf"), None);
        assert_eq!(parse_real("-"), None);
    }

    #[test]
    fn translation_only_rows_are_padded() {
        let text = "GRID,1,0,0,0\nGRID,2,1,0,0\nMODE,1,10.0\n1,0,0,1\n2,0,0,1.0-1\n";
        let m = parse_structural_model(text).unwrap();
        assert_eq!(m.modes[(2, 0)], 1.0);
        assert_eq!(m.modes[(8, 0)], 0.1);
        assert_eq!(m.modes[(3, 0)], 0.0);
        assert_eq!(m.stiffness[(0, 0)], 100.0);
    }

    #[test]
    fn genmass_clears_diagonal_flag() {
        let text = "\
GRID,1,0,0,0
MODE,1,1.0
1,0,0,1,0,0,0
MODE,2,2.0
1,0,0,0,0,1,0
GENMASS,2
2.0,0.5
0.5,1.0
";
        let m = parse_structural_model(text).unwrap();
        assert!(!m.diagonal);
        assert_eq!(m.mass[(0, 1)], 0.5);
        assert_eq!(m.mass[(0, 0)], 2.0);
        assert_eq!(m.stiffness[(1, 1)], 4.0);
    }

    #[test]
    fn duplicate_node_reports_location() {
        let err = parse_structural_model("GRID,1,0,0,0\nGRID,1,1,0,0\n").unwrap_err();
        match err {
            Error::Parse { location, message } => {
                assert_eq!(location.line, 2);
                assert_eq!(location.column, 6);
                assert!(message.contains("duplicate"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_number_reports_column() {
        let err = parse_structural_model("GRID,1,0.0,x.y,0\n").unwrap_err();
        match err {
            Error::Parse { location, .. } => assert_eq!((location.line, location.column), (1, 12)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn mode_length_mismatch() {
        let err = parse_structural_model("GRID,1,0,0,0\nMODE,1,1.0\n1,0,0,1,0\n").unwrap_err();
        assert!(err.to_string().contains("length mismatch"), "{err}");
        let err = parse_structural_model("GRID,1,0,0,0\nGRID,2,1,0,0\nMODE,1,1.0\n1,0,0,1,0,0,0\n").unwrap_err();
        assert!(err.to_string().contains("length mismatch"), "{err}");
    }

    #[test]
    fn non_spd_mass_rejected() {
        let text = "GRID,1,0,0,0\nMODE,1,1.0\n1,0,0,1,0,0,0\nGENMASS,1\n-1.0\n";
        let err = parse_structural_model(text).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)), "{err}");
    }

    #[test]
    fn comments_and_damp() {
        let text = "$ header\nGRID,1,0,0,0\n\nMODE,1,45.0\n1,0,0,1,0,0,0\nDAMP,1,0.01\n";
        let m = parse_structural_model(text).unwrap();
        assert_eq!(m.damping, DampingSpec::Ratios(vec![0.01]));
        let again = parse_structural_model(&write_structural_model(&m)).unwrap();
        assert_eq!(again, m);
    }
}
