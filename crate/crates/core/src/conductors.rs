//! Field models of stranded, solid and foil conductors as energy systems.
//!
//! Power balances along solutions (a = magnetic vector potential dofs):
//! - stranded: `dH/dt = −ȧᵀM_σȧ − iᵀR_str i + i·v_str`
//! - solid: `dH/dt = −(ȧ − Xv)ᵀM_σ(ȧ − Xv) + i_sol·v_sol`
//! - foil: `dH/dt = −[ȧ; e]ᵀ[[M_σ, −X], [−Xᵀ, G]][ȧ; e] + i_foil·v_foil`
//!
//! with `H = ½aᵀK_νa` in all three cases.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::{assemble_region_mass, assemble_solid_column, assemble_stranded_column, pseudo_solve, FieldMatrices};
use crate::linalg::{min_sym_eig_on_support, Factorization, SparseMat};
use crate::manifest::Manifest;
use crate::mtx::read_matrix_market;
use crate::system::{Blocks, EnergySystem, Partition, DEFAULT_TOL};

/// Conductivity of the copper winding used for the stranded DC resistance.
pub const SIGMA_COPPER: f64 = 58e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConductorKind {
    Stranded,
    Solid,
    Foil,
}

impl ConductorKind {
    pub const ALL: [ConductorKind; 3] = [ConductorKind::Stranded, ConductorKind::Solid, ConductorKind::Foil];

    pub fn tag(self) -> &'static str {
        match self {
            ConductorKind::Stranded => "stranded",
            ConductorKind::Solid => "solid",
            ConductorKind::Foil => "foil",
        }
    }
}

impl fmt::Display for ConductorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ConductorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stranded" => Ok(ConductorKind::Stranded),
            "solid" => Ok(ConductorKind::Solid),
            "foil" => Ok(ConductorKind::Foil),
            _ => Err(Error::Model(format!("unknown conductor kind '{s}'"))),
        }
    }
}

fn square(name: &str, m: &SparseMat, n: usize) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(Error::dim(name, format!("{n}x{n}"), format!("{}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

fn rows(name: &str, m: &SparseMat, n: usize) -> Result<()> {
    if m.nrows() != n {
        return Err(Error::dim(name, format!("{n} rows"), format!("{} rows", m.nrows())));
    }
    Ok(())
}

fn check_sym(name: &str, m: &SparseMat) -> Result<()> {
    let tol = DEFAULT_TOL * m.fro_norm();
    let d = m.sym_defect();
    if !(d <= tol) {
        return Err(Error::Structure {
            what: format!("{name} (symmetry)"),
            defect: d,
            tolerance: tol,
        });
    }
    Ok(())
}

fn check_psd(name: &str, m: &SparseMat) -> Result<()> {
    check_sym(name, m)?;
    let norm = m.fro_norm();
    let lo = min_sym_eig_on_support(m, 0.5 * DEFAULT_TOL * norm)?;
    if !(-lo <= DEFAULT_TOL * norm) {
        return Err(Error::Structure {
            what: format!("{name} (positive semi-definiteness)"),
            defect: -lo,
            tolerance: DEFAULT_TOL * norm,
        });
    }
    Ok(())
}

fn field_blocks(m_sigma: &SparseMat, k_nu: &SparseMat) -> Result<usize> {
    let n = m_sigma.nrows();
    square("M_sigma", m_sigma, n)?;
    square("K_nu", k_nu, n)?;
    check_psd("M_sigma", m_sigma)?;
    check_sym("K_nu", k_nu)?;
    Ok(n)
}

fn labels(n_w: usize, z3: impl IntoIterator<Item = String>) -> Vec<String> {
    (0..n_w).map(|k| format!("a{k}")).chain(z3).collect()
}

#[derive(Clone, Debug)]
pub struct StrandedModel {
    pub m_sigma: SparseMat,
    pub k_nu: SparseMat,
    /// Winding functions, one column per winding.
    pub x: SparseMat,
    pub r_str: SparseMat,
}

impl StrandedModel {
    pub fn new(m_sigma: SparseMat, k_nu: SparseMat, x: SparseMat, r_str: SparseMat) -> Result<Self> {
        let n_w = field_blocks(&m_sigma, &k_nu)?;
        rows("X_str", &x, n_w)?;
        square("R_str", &r_str, x.ncols())?;
        check_psd("R_str", &r_str)?;
        Ok(StrandedModel { m_sigma, k_nu, x, r_str })
    }

    pub fn n_w(&self) -> usize {
        self.m_sigma.nrows()
    }

    pub fn n_str(&self) -> usize {
        self.x.ncols()
    }
}

/// `z1 = a`, `z3 = i_str`, `u = v_str`, `y = i_str`.
pub fn stranded_system(m: &StrandedModel) -> Result<EnergySystem> {
    let (n_w, n_s) = (m.n_w(), m.n_str());
    let j = SparseMat::block(
        &[vec![None, Some(&m.x)], vec![Some(&m.x.transpose().scale(-1.0)), None]],
        &[n_w, n_s],
        &[n_w, n_s],
    );
    let r = SparseMat::block_diag(&[&m.m_sigma, &m.r_str]);
    let b = SparseMat::block(&[vec![None], vec![Some(&SparseMat::identity(n_s))]], &[n_w, n_s], &[n_s]);
    let sys = EnergySystem::new(
        Partition::new(n_w, 0, n_s, n_s),
        Blocks {
            e: SparseMat::zeros(0, 0),
            j,
            r,
            b,
            m1: m.k_nu.clone(),
            m2: SparseMat::zeros(0, 0),
            s: SparseMat::zeros(0, 0),
        },
    )?;
    sys.with_labels(
        labels(n_w, (0..n_s).map(|k| format!("i_str{k}"))),
        (0..n_s).map(|k| format!("v_str{k}")).collect(),
    )
}

#[derive(Clone, Debug)]
pub struct SolidModel {
    pub m_sigma: SparseMat,
    pub k_nu: SparseMat,
    /// Coefficients of the voltage distribution functions, one column per conductor.
    pub x: SparseMat,
    /// `XᵀM_σX`
    pub g: SparseMat,
}

impl SolidModel {
    pub fn new(m_sigma: SparseMat, k_nu: SparseMat, x: SparseMat) -> Result<Self> {
        let n_w = field_blocks(&m_sigma, &k_nu)?;
        rows("X_sol", &x, n_w)?;
        let g = x.transpose().matmul(&m_sigma).matmul(&x).symmetric_part();
        Ok(SolidModel { m_sigma, k_nu, x, g })
    }

    pub fn n_w(&self) -> usize {
        self.m_sigma.nrows()
    }

    pub fn n_sol(&self) -> usize {
        self.x.ncols()
    }

    /// `[I, −X]`, the factor in `R = [I, −X]ᵀ M_σ [I, −X]`.
    pub fn factor(&self) -> SparseMat {
        let (n_w, n_s) = (self.n_w(), self.n_sol());
        SparseMat::block(
            &[vec![Some(&SparseMat::identity(n_w)), Some(&self.x.scale(-1.0))]],
            &[n_w],
            &[n_w, n_s],
        )
    }
}

/// `z1 = a`, `z3 = v_sol`, `u = i_sol`, `y = v_sol`.
pub fn solid_system(m: &SolidModel) -> Result<EnergySystem> {
    let (n_w, n_s) = (m.n_w(), m.n_sol());
    let mx = m.m_sigma.matmul(&m.x).scale(-1.0);
    let r = SparseMat::block(
        &[vec![Some(&m.m_sigma), Some(&mx)], vec![Some(&mx.transpose()), Some(&m.g)]],
        &[n_w, n_s],
        &[n_w, n_s],
    );
    let b = SparseMat::block(&[vec![None], vec![Some(&SparseMat::identity(n_s))]], &[n_w, n_s], &[n_s]);
    let sys = EnergySystem::new(
        Partition::new(n_w, 0, n_s, n_s),
        Blocks {
            e: SparseMat::zeros(0, 0),
            j: SparseMat::zeros(n_w + n_s, n_w + n_s),
            r,
            b,
            m1: m.k_nu.clone(),
            m2: SparseMat::zeros(0, 0),
            s: SparseMat::zeros(0, 0),
        },
    )?;
    sys.with_labels(
        labels(n_w, (0..n_s).map(|k| format!("v_sol{k}"))),
        (0..n_s).map(|k| format!("i_sol{k}")).collect(),
    )
}

#[derive(Clone, Debug)]
pub struct FoilModel {
    pub m_sigma: SparseMat,
    pub k_nu: SparseMat,
    /// n_w × n_p
    pub x: SparseMat,
    /// Positive weights of the voltage polynomial coefficients, length n_p.
    pub c: Vec<f64>,
    /// n_p × n_p
    pub g: SparseMat,
}

impl FoilModel {
    /// Checks that the columns of `x` lie in the column space of `M_σ` and
    /// that the Schur complement `G − XᵀM_σ⁺X` is symmetric PSD.
    pub fn new(m_sigma: SparseMat, k_nu: SparseMat, x: SparseMat, c: Vec<f64>, g: SparseMat) -> Result<Self> {
        let n_w = field_blocks(&m_sigma, &k_nu)?;
        rows("X_foil", &x, n_w)?;
        let n_p = x.ncols();
        if c.len() != n_p {
            return Err(Error::dim("c", format!("length {n_p}"), format!("length {}", c.len())));
        }
        square("G_foil", &g, n_p)?;
        check_sym("G_foil", &g)?;
        let schur = g.sub(&x.transpose().matmul(&pseudo_solve(&m_sigma, &x)?));
        let norm = g.fro_norm().max(schur.fro_norm());
        let lo = min_sym_eig_on_support(&schur, 0.5 * DEFAULT_TOL * norm)?;
        if !(-lo <= DEFAULT_TOL * norm) {
            return Err(Error::Structure {
                what: "G_foil − X_foilᵀ M_σ⁺ X_foil (positive semi-definiteness)".into(),
                defect: -lo,
                tolerance: DEFAULT_TOL * norm,
            });
        }
        Ok(FoilModel { m_sigma, k_nu, x, c, g })
    }

    /// Uses `G = XᵀM_σ⁺X`, which makes the Schur complement vanish.
    pub fn with_default_conductance(m_sigma: SparseMat, k_nu: SparseMat, x: SparseMat, c: Vec<f64>) -> Result<Self> {
        let g = x.transpose().matmul(&pseudo_solve(&m_sigma, &x)?).symmetric_part();
        FoilModel::new(m_sigma, k_nu, x, c, g)
    }

    pub fn n_w(&self) -> usize {
        self.m_sigma.nrows()
    }

    pub fn n_p(&self) -> usize {
        self.x.ncols()
    }

    /// `G − XᵀM_σ⁺X`
    pub fn schur_complement(&self) -> Result<SparseMat> {
        Ok(self.g.sub(&self.x.transpose().matmul(&pseudo_solve(&self.m_sigma, &self.x)?)))
    }
}

/// `z1 = a`, `z3 = [e; i_foil]`, `u = v_foil`, `y = i_foil`.
pub fn foil_system(m: &FoilModel) -> Result<EnergySystem> {
    let (n_w, n_p) = (m.n_w(), m.n_p());
    let sizes = [n_w, n_p, 1];
    let c = SparseMat::column(&m.c);
    let j = SparseMat::block(
        &[
            vec![None, None, None],
            vec![None, None, Some(&c)],
            vec![None, Some(&c.transpose().scale(-1.0)), None],
        ],
        &sizes,
        &sizes,
    );
    let mx = m.x.scale(-1.0);
    let r = SparseMat::block(
        &[
            vec![Some(&m.m_sigma), Some(&mx), None],
            vec![Some(&mx.transpose()), Some(&m.g), None],
            vec![None, None, None],
        ],
        &sizes,
        &sizes,
    );
    let b = SparseMat::block(&[vec![None], vec![None], vec![Some(&SparseMat::identity(1))]], &sizes, &[1]);
    let sys = EnergySystem::new(
        Partition::new(n_w, 0, n_p + 1, 1),
        Blocks {
            e: SparseMat::zeros(0, 0),
            j,
            r,
            b,
            m1: m.k_nu.clone(),
            m2: SparseMat::zeros(0, 0),
            s: SparseMat::zeros(0, 0),
        },
    )?;
    sys.with_labels(
        labels(n_w, (0..n_p).map(|k| format!("e{k}")).chain(["i_foil".to_string()])),
        vec!["v_foil".into()],
    )
}

/// Random foil model on a given conductivity matrix: `X = M_σW` with `W`
/// uniform in [−1, 1], `c` uniform in [0.5, 1.5], `G = XᵀM_σ⁺X`. The
/// stiffness matrix is `M_σ + I` so the result is always a regular model.
pub fn synth_foil(m_sigma: &SparseMat, n_p: usize, seed: u64) -> Result<FoilModel> {
    let n_w = m_sigma.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = SparseMat::from_fn(n_w, n_p, |_, _| rng.random_range(-1.0..1.0));
    let c: Vec<f64> = (0..n_p).map(|_| rng.random_range(0.5..1.5)).collect();
    let x = m_sigma.matmul(&w);
    let k_nu = m_sigma.add(&SparseMat::identity(n_w));
    FoilModel::with_default_conductance(m_sigma.clone(), k_nu, x, c)
}

/// `L = XᵀK_ν⁻¹X`, the lumped inductance seen by the winding(s).
pub fn lumped_inductance(k_nu: &SparseMat, x: &SparseMat) -> Result<SparseMat> {
    square("K_nu", k_nu, x.nrows())?;
    if x.is_zero() {
        return Ok(SparseMat::zeros(x.ncols(), x.ncols()));
    }
    let f = Factorization::new(k_nu, "reluctivity matrix K_nu")?;
    let cols: Vec<Vec<f64>> = (0..x.ncols())
        .map(|j| {
            let mut c = vec![0.0; x.nrows()];
            for (i, jj, v) in x.triplets() {
                if jj == j {
                    c[i] = v;
                }
            }
            c
        })
        .collect();
    let y: Vec<Vec<f64>> = cols.iter().map(|c| f.solve(c)).collect();
    let l = SparseMat::from_fn(x.ncols(), x.ncols(), |i, j| {
        cols[i].iter().zip(&y[j]).map(|(a, b)| a * b).sum()
    });
    Ok(l.symmetric_part())
}

/// Stranded winding on `region` of an assembled field problem. With
/// `sigma_wire = Some(σ)` the DC resistance `XᵀM_str⁺X` of the region at
/// conductivity σ is included; with `None` the winding is lossless.
pub fn stranded_from_field(f: &FieldMatrices, region: &str, turns: f64, sigma_wire: Option<f64>) -> Result<StrandedModel> {
    let x = SparseMat::column(&f.dofs.reduce_vector(&assemble_stranded_column(&f.mesh, region, turns)?));
    let r_str = match sigma_wire {
        Some(s) if s > 0.0 => {
            let m_str = f.dofs.reduce_matrix(&assemble_region_mass(&f.mesh, region, s)?);
            x.transpose().matmul(&pseudo_solve(&m_str, &x)?).symmetric_part()
        }
        Some(s) => return Err(Error::Model(format!("wire conductivity must be positive, got {s}"))),
        None => SparseMat::zeros(1, 1),
    };
    StrandedModel::new(f.m_sigma.clone(), f.k_nu.clone(), x, r_str)
}

/// Solid conductor occupying `region`.
pub fn solid_from_field(f: &FieldMatrices, region: &str) -> Result<SolidModel> {
    let (_, chi) = assemble_solid_column(&f.mesh, region, &f.materials)?;
    SolidModel::new(
        f.m_sigma.clone(),
        f.k_nu.clone(),
        SparseMat::column(&f.dofs.reduce_vector(&chi)),
    )
}

/// The single-foil model `X_foil = M_σX_sol`, `c = 1`, `G_foil = G_sol`,
/// which describes the same physics as the solid conductor.
pub fn foil_from_solid(s: &SolidModel) -> Result<FoilModel> {
    if s.n_sol() != 1 {
        return Err(Error::Model("foil equivalent needs exactly one solid conductor".into()));
    }
    FoilModel::new(
        s.m_sigma.clone(),
        s.k_nu.clone(),
        s.m_sigma.matmul(&s.x),
        vec![1.0],
        s.g.clone(),
    )
}

#[derive(Clone, Debug)]
pub enum ConductorModel {
    Stranded(StrandedModel),
    Solid(SolidModel),
    Foil(FoilModel),
}

impl ConductorModel {
    pub fn kind(&self) -> ConductorKind {
        match self {
            ConductorModel::Stranded(_) => ConductorKind::Stranded,
            ConductorModel::Solid(_) => ConductorKind::Solid,
            ConductorModel::Foil(_) => ConductorKind::Foil,
        }
    }

    pub fn system(&self) -> Result<EnergySystem> {
        match self {
            ConductorModel::Stranded(m) => stranded_system(m),
            ConductorModel::Solid(m) => solid_system(m),
            ConductorModel::Foil(m) => foil_system(m),
        }
    }

    /// Number of circuit ports the model exposes.
    pub fn n_ports(&self) -> usize {
        match self {
            ConductorModel::Stranded(m) => m.n_str(),
            ConductorModel::Solid(m) => m.n_sol(),
            ConductorModel::Foil(_) => 1,
        }
    }

    /// Reads a model directory: `manifest.txt` with `kind` and the matrix
    /// file names under `M_sigma`, `K_nu`, `X`, plus `R` (stranded, optional),
    /// `c` (foil) and `G` (foil, optional).
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.txt");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let man = Manifest::parse(&text)?;
        let kind: ConductorKind = man.require("kind")?.parse()?;
        let load = |key: &str| -> Result<SparseMat> { read_matrix_market(&dir.join(man.require(key)?)) };
        let m_sigma = load("M_sigma")?;
        let k_nu = load("K_nu")?;
        let x = load("X")?;
        Ok(match kind {
            ConductorKind::Stranded => {
                let r = match man.get("R") {
                    Some(_) => load("R")?,
                    None => SparseMat::zeros(x.ncols(), x.ncols()),
                };
                ConductorModel::Stranded(StrandedModel::new(m_sigma, k_nu, x, r)?)
            }
            ConductorKind::Solid => ConductorModel::Solid(SolidModel::new(m_sigma, k_nu, x)?),
            ConductorKind::Foil => {
                let c = load("c")?;
                if c.ncols() != 1 {
                    return Err(Error::dim("c", "a single column", format!("{} columns", c.ncols())));
                }
                let c: Vec<f64> = (0..c.nrows()).map(|i| c.get(i, 0)).collect();
                let model = match man.get("G") {
                    Some(_) => FoilModel::new(m_sigma, k_nu, x, c, load("G")?)?,
                    None => FoilModel::with_default_conductance(m_sigma, k_nu, x, c)?,
                };
                ConductorModel::Foil(model)
            }
        })
    }

    /// Writes the directory layout read by [`ConductorModel::load_dir`].
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        use crate::mtx::write_matrix_market;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut man = Manifest::new();
        man.set("kind", self.kind());
        let mut put = |key: &str, m: &SparseMat| -> Result<()> {
            let file = format!("{key}.mtx");
            write_matrix_market(&dir.join(&file), m)?;
            man.set(key, file);
            Ok(())
        };
        match self {
            ConductorModel::Stranded(m) => {
                put("M_sigma", &m.m_sigma)?;
                put("K_nu", &m.k_nu)?;
                put("X", &m.x)?;
                put("R", &m.r_str)?;
            }
            ConductorModel::Solid(m) => {
                put("M_sigma", &m.m_sigma)?;
                put("K_nu", &m.k_nu)?;
                put("X", &m.x)?;
            }
            ConductorModel::Foil(m) => {
                put("M_sigma", &m.m_sigma)?;
                put("K_nu", &m.k_nu)?;
                put("X", &m.x)?;
                put("c", &SparseMat::column(&m.c))?;
                put("G", &m.g)?;
            }
        }
        crate::io::write_atomic(&dir.join("manifest.txt"), man.to_text().as_bytes())
    }
}
