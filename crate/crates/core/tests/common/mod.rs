#![allow(dead_code)]

use std::path::PathBuf;

use aerocouple::aero::{box_surface, SurfacePoint};
use aerocouple::model_io::{
    parse_config, parse_structural_model, AeroModelKind, CouplingConfig, DampingSpec, Node, PressureSettings,
    SimulationMode, StructuralModel, SurfaceSpec, TransferMode,
};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn load(config: &str, model: &str) -> (CouplingConfig, StructuralModel) {
    let cfg = parse_config(&std::fs::read_to_string(data(config)).unwrap()).unwrap();
    let mdl = parse_structural_model(&std::fs::read_to_string(data(model)).unwrap()).unwrap();
    (cfg, mdl)
}

/// Prints one verdict line and hands the verdict back.
pub fn verdict(id: &str, pass: bool, detail: impl AsRef<str>) -> bool {
    println!("{id} {}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    pass
}

pub const BOX_MIN: [f64; 3] = [-0.5, -0.4, -0.3];
pub const BOX_MAX: [f64; 3] = [0.5, 0.4, 0.3];
pub const BOX_CELLS: usize = 4;

pub fn box_points() -> Vec<SurfacePoint> {
    box_surface(Vector3::from(BOX_MIN), Vector3::from(BOX_MAX), BOX_CELLS).unwrap()
}

/// Non-coplanar structural cloud inside the synthetic box.
pub fn box_nodes() -> Vec<Node> {
    let mut nodes = Vec::new();
    let mut id = 10;
    for sx in [-0.35, 0.35] {
        for sy in [-0.25, 0.25] {
            for sz in [-0.2, 0.2] {
                id += 1;
                nodes.push(Node {
                    id,
                    position: Vector3::new(sx, sy + 0.03 * sx, sz - 0.02 * sy),
                });
            }
        }
    }
    nodes.push(Node {
        id: 99,
        position: Vector3::new(0.05, -0.02, 0.01),
    });
    nodes
}

/// Random `n`-mode structural model on the box cloud with an SPD
/// stiffness dominating the unit mass.
pub fn random_model(n: usize, seed: u64) -> StructuralModel {
    let mut rng = StdRng::seed_from_u64(seed);
    let nodes = box_nodes();
    let modes = DMatrix::from_fn(6 * nodes.len(), n, |_, _| rng.gen_range(-0.1..0.1));
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let stiffness = &a * a.transpose() * 50.0 + DMatrix::identity(n, n) * 400.0;
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.2..0.2));
    let mass = &b * b.transpose() + DMatrix::identity(n, n);
    StructuralModel::general(nodes, modes, mass, stiffness, DampingSpec::Ratios(vec![0.02; n])).unwrap()
}

pub fn pressure_settings() -> PressureSettings {
    PressureSettings {
        base: 120.0,
        gradient: Vector3::new(300.0, -150.0, 500.0),
        stiffness: 2.0e3,
        ramp: 0.0,
        surface: SurfaceSpec::Box {
            min: Vector3::from(BOX_MIN),
            max: Vector3::from(BOX_MAX),
            cells: BOX_CELLS,
        },
    }
}

pub fn synthetic_config(mode: SimulationMode, transfer: TransferMode) -> CouplingConfig {
    let mut cfg = CouplingConfig::new(mode);
    cfg.aero_model = AeroModelKind::SyntheticPressure;
    cfg.pressure = pressure_settings();
    cfg.transfer_mode = transfer;
    cfg.fsi_tolerance = 1e-13;
    cfg.max_fsi_iters = 200;
    cfg
}

/// Monolithic solution of the steady synthetic-pressure problem, assembled
/// directly from the interpolation operator, the pressure law and the mode
/// shapes: `(K − A) q = F₀`.
pub fn monolithic_steady(model: &StructuralModel, cfg: &CouplingConfig) -> DVector<f64> {
    let points = box_points();
    let structural: Vec<_> = model.nodes.iter().map(|n| n.position).collect();
    let fluid: Vec<_> = points.iter().map(|p| p.position).collect();
    let map = aerocouple::transfer::RbfMap::build(&structural, &fluid, cfg.rbf_support_radius).unwrap();
    let h = map.operator();
    let (nf, ns, n) = (fluid.len(), structural.len(), model.n_modes());
    // structural translations per unit q
    let ut = DMatrix::from_fn(3 * ns, n, |r, c| model.modes[(6 * (r / 3) + r % 3, c)]);
    // H ⊗ I₃
    let h3 = DMatrix::from_fn(3 * nf, 3 * ns, |r, c| if r % 3 == c % 3 { h[(r / 3, c / 3)] } else { 0.0 });
    let law = &cfg.pressure;
    let mut f0 = DVector::zeros(3 * nf);
    // f = −(p₀ + s u·n) a n  ⇒  ∂f/∂u = −s a n nᵀ
    let mut df = DMatrix::zeros(3 * nf, 3 * nf);
    for (i, p) in points.iter().enumerate() {
        let p0 = law.base + law.gradient.dot(&p.position);
        for a in 0..3 {
            f0[3 * i + a] = -p0 * p.area * p.normal[a];
            for b in 0..3 {
                df[(3 * i + a, 3 * i + b)] = -law.stiffness * p.area * p.normal[a] * p.normal[b];
            }
        }
    }
    let transfer_t = match cfg.transfer_mode {
        TransferMode::Conservative => h3.transpose(),
        TransferMode::Consistent => panic!("the monolithic oracle assumes conservative transfer"),
    };
    let gen0 = ut.transpose() * &transfer_t * &f0;
    let a = ut.transpose() * &transfer_t * &df * &h3 * &ut;
    (&model.stiffness - a).lu().solve(&gen0).unwrap()
}
