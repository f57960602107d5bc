//! Pure-component constants and ideal-gas properties.
//!
//! The bundled data file covers methane, ethylene, ethane and propane; a
//! user-supplied file with the same schema can replace it (CLI flag
//! `--components`). Constants live in the repository, not behind a network
//! call, so every result is reproducible from the checked-in data.

use crate::dual::DualError;
use crate::scalar::Scalar;
use serde::Deserialize;
use thiserror::Error;

/// Universal gas constant, J/(mol K), CODATA 2018.
pub const R: f64 = 8.314462618;

/// Ideal-gas reference temperature for enthalpies, K.
pub const T_REF: f64 = 298.15;

/// Operating envelope for the cp polynomial, K.
pub const CP_T_MIN: f64 = 150.0;
pub const CP_T_MAX: f64 = 500.0;

const BUNDLED: &str = include_str!("../data/components.toml");

#[derive(Debug, Error)]
pub enum PropertyError {
    #[error("cannot read component file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("component file is not well-formed: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("component document contains no species records")]
    Empty,
    #[error("species `{species}`, field `{field}`: {message}")]
    Validation {
        species: String,
        field: &'static str,
        message: String,
    },
    #[error("temperature {t} K outside the cp envelope [{lo}, {hi}] K")]
    TemperatureRange { t: f64, lo: f64, hi: f64 },
    #[error("unknown species `{0}` in interaction record")]
    UnknownSpecies(String),
    #[error(transparent)]
    Dual(#[from] DualError),
}

/// Pure-species constants.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Component {
    pub name: String,
    #[serde(rename = "tc_k")]
    pub tc: f64,
    #[serde(rename = "pc_pa")]
    pub pc: f64,
    pub omega: f64,
    /// cp(T) = c0 + c1 T + c2 T^2 + c3 T^3, J/(mol K).
    pub cp_ig: [f64; 4],
    #[serde(rename = "h_ref_j_per_mol")]
    pub h_ref: f64,
}

impl Component {
    fn validate(&self) -> Result<(), PropertyError> {
        let err = |field, message: String| PropertyError::Validation {
            species: self.name.clone(),
            field,
            message,
        };
        if !(self.tc > 0.0) {
            return Err(err("tc_k", format!("critical temperature {} must be > 0", self.tc)));
        }
        if !(self.pc > 0.0) {
            return Err(err("pc_pa", format!("critical pressure {} must be > 0", self.pc)));
        }
        if !(-0.5 < self.omega && self.omega < 1.0) {
            return Err(err(
                "omega",
                format!("acentric factor {} outside (-0.5, 1.0)", self.omega),
            ));
        }
        // cp must stay positive across the operating envelope
        let mut t = CP_T_MIN;
        while t <= CP_T_MAX {
            if self.cp_poly(t) <= 0.0 {
                return Err(err(
                    "cp_ig",
                    format!("cp({t} K) = {} J/(mol K) is not positive", self.cp_poly(t)),
                ));
            }
            t += 1.0;
        }
        Ok(())
    }

    fn cp_poly(&self, t: f64) -> f64 {
        let [c0, c1, c2, c3] = self.cp_ig;
        c0 + t * (c1 + t * (c2 + t * c3))
    }

    /// Ideal-gas heat capacity at `t` kelvin, restricted to the envelope the
    /// polynomial was fitted on.
    pub fn cp_ideal(&self, t: f64) -> Result<f64, PropertyError> {
        if !(CP_T_MIN..=CP_T_MAX).contains(&t) {
            return Err(PropertyError::TemperatureRange {
                t,
                lo: CP_T_MIN,
                hi: CP_T_MAX,
            });
        }
        Ok(self.cp_poly(t))
    }

    /// Ideal-gas enthalpy h_ref + integral of cp from T_REF to T, evaluated
    /// in closed form so it stays exact and differentiable.
    pub fn ideal_enthalpy<S: Scalar>(&self, t: &S) -> Result<S, PropertyError> {
        let tv = t.value();
        if !(CP_T_MIN..=CP_T_MAX).contains(&tv) {
            return Err(PropertyError::TemperatureRange {
                t: tv,
                lo: CP_T_MIN,
                hi: CP_T_MAX,
            });
        }
        let [c0, c1, c2, c3] = self.cp_ig;
        let mut h = S::constant(self.h_ref);
        for (k, c) in [c0, c1, c2, c3].into_iter().enumerate() {
            let p = (k + 1) as u32;
            let term = (t.powi(p) - S::constant(T_REF.powi(p as i32))) * S::constant(c / p as f64);
            h = h + term;
        }
        Ok(h)
    }
}

/// Symmetric binary interaction coefficients with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySet {
    n: usize,
    k: Vec<f64>,
}

impl BinarySet {
    pub fn zeros(n: usize) -> Self {
        BinarySet { n, k: vec![0.0; n * n] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    /// Sets k[i][j] and k[j][i]; the diagonal stays zero.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        if i == j {
            return;
        }
        self.k[i * self.n + j] = value;
        self.k[j * self.n + i] = value;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[derive(Debug, Deserialize)]
struct InteractionRecord {
    i: String,
    j: String,
    k: f64,
}

#[derive(Debug, Deserialize)]
struct Document {
    #[serde(default)]
    species: Vec<Component>,
    #[serde(default)]
    interaction: Vec<InteractionRecord>,
}

/// A loaded component set: species in document order plus the binary
/// interaction matrix. Immutable after load.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSet {
    pub components: Vec<Component>,
    pub binary: BinarySet,
}

impl ComponentSet {
    /// The four-species set shipped with the library.
    pub fn bundled() -> Self {
        Self::from_toml(BUNDLED).expect("bundled component data must be valid")
    }

    pub fn from_file(path: &str) -> Result<Self, PropertyError> {
        let text = std::fs::read_to_string(path).map_err(|source| PropertyError::Io {
            path: path.to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, PropertyError> {
        let doc: Document = toml::from_str(text)?;
        if doc.species.is_empty() {
            return Err(PropertyError::Empty);
        }
        for c in &doc.species {
            c.validate()?;
        }
        let mut binary = BinarySet::zeros(doc.species.len());
        for rec in &doc.interaction {
            let i = doc
                .species
                .iter()
                .position(|c| c.name == rec.i)
                .ok_or_else(|| PropertyError::UnknownSpecies(rec.i.clone()))?;
            let j = doc
                .species
                .iter()
                .position(|c| c.name == rec.j)
                .ok_or_else(|| PropertyError::UnknownSpecies(rec.j.clone()))?;
            binary.set(i, j, rec.k);
        }
        Ok(ComponentSet {
            components: doc.species,
            binary,
        })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.components.iter().map(|c| c.name.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_set_has_the_four_species_in_order() {
        let set = ComponentSet::bundled();
        assert_eq!(set.names(), ["methane", "ethylene", "ethane", "propane"]);
    }

    #[test]
    fn bundled_methane_constants() {
        let set = ComponentSet::bundled();
        let methane = &set.components[0];
        assert!((methane.tc - 190.56).abs() < 0.1);
        assert!((methane.pc - 4.60e6).abs() < 0.05e6);
        assert!((methane.omega - 0.011).abs() < 0.002);
    }

    #[test]
    fn critical_temperatures_are_physically_ordered() {
        let set = ComponentSet::bundled();
        let tc: Vec<f64> = set.components.iter().map(|c| c.tc).collect();
        assert!(tc[0] < tc[1] && tc[1] < tc[2] && tc[2] < tc[3]);
    }

    #[test]
    fn reload_is_idempotent() {
        let a = ComponentSet::bundled();
        let b = ComponentSet::bundled();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_document_is_rejected() {
        assert!(matches!(
            ComponentSet::from_toml(""),
            Err(PropertyError::Empty)
        ));
    }

    #[test]
    fn missing_field_names_the_problem() {
        let text = "[[species]]\nname = \"x\"\ntc_k = 100.0\n";
        let err = ComponentSet::from_toml(text).unwrap_err();
        assert!(matches!(err, PropertyError::Parse(_)));
        assert!(err.to_string().contains("pc_pa") || err.to_string().contains("missing"));
    }

    #[test]
    fn out_of_range_omega_is_rejected_with_species_and_field() {
        let text = r#"
[[species]]
name = "bogus"
tc_k = 100.0
pc_pa = 1.0e6
omega = 1.5
cp_ig = [30.0, 0.0, 0.0, 0.0]
h_ref_j_per_mol = 0.0
"#;
        let err = ComponentSet::from_toml(text).unwrap_err();
        match err {
            PropertyError::Validation { species, field, .. } => {
                assert_eq!(species, "bogus");
                assert_eq!(field, "omega");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn cp_at_reference_matches_direct_polynomial() {
        let set = ComponentSet::bundled();
        for c in &set.components {
            let [c0, c1, c2, c3] = c.cp_ig;
            let direct = c0 + c1 * T_REF + c2 * T_REF * T_REF + c3 * T_REF.powi(3);
            let cp = c.cp_ideal(T_REF).unwrap();
            assert!((cp - direct).abs() < 1e-12 * direct.abs());
        }
    }

    #[test]
    fn methane_cp_at_300k_close_to_published() {
        let set = ComponentSet::bundled();
        let cp = set.components[0].cp_ideal(300.0).unwrap();
        // published ideal-gas value is about 35.69 J/(mol K)
        assert!((cp - 35.7).abs() < 0.5, "cp(300 K) = {cp}");
    }

    #[test]
    fn cp_is_continuous() {
        let set = ComponentSet::bundled();
        for c in &set.components {
            let t = 321.4;
            let d = (c.cp_ideal(t + 1e-6).unwrap() - c.cp_ideal(t).unwrap()).abs();
            assert!(d < 1e-3);
        }
    }

    #[test]
    fn cp_envelope_is_enforced() {
        let set = ComponentSet::bundled();
        assert!(matches!(
            set.components[0].cp_ideal(149.0),
            Err(PropertyError::TemperatureRange { .. })
        ));
        assert!(matches!(
            set.components[0].cp_ideal(501.0),
            Err(PropertyError::TemperatureRange { .. })
        ));
    }

    #[test]
    fn ideal_enthalpy_derivative_is_cp() {
        use crate::dual::Dual;
        let set = ComponentSet::bundled();
        for c in &set.components {
            for &t in &[200.0, 298.15, 400.0] {
                let h = c.ideal_enthalpy(&Dual::seeded(t, 1, 0)).unwrap();
                let cp = c.cp_ideal(t).unwrap();
                assert!(
                    (h.tangent(0) - cp).abs() < 1e-9 * cp.abs().max(1.0),
                    "dh/dT {} vs cp {} at {t} K",
                    h.tangent(0),
                    cp
                );
            }
        }
    }

    #[test]
    fn ideal_enthalpy_is_zero_at_reference() {
        let set = ComponentSet::bundled();
        for c in &set.components {
            assert_eq!(c.ideal_enthalpy(&T_REF).unwrap(), c.h_ref);
        }
    }

    #[test]
    fn interaction_records_build_a_symmetric_matrix() {
        let text = r#"
[[species]]
name = "a"
tc_k = 100.0
pc_pa = 1.0e6
omega = 0.0
cp_ig = [30.0, 0.0, 0.0, 0.0]
h_ref_j_per_mol = 0.0

[[species]]
name = "b"
tc_k = 200.0
pc_pa = 2.0e6
omega = 0.1
cp_ig = [30.0, 0.0, 0.0, 0.0]
h_ref_j_per_mol = 0.0

[[interaction]]
i = "a"
j = "b"
k = 0.013
"#;
        let set = ComponentSet::from_toml(text).unwrap();
        assert_eq!(set.binary.get(0, 1), 0.013);
        assert_eq!(set.binary.get(1, 0), 0.013);
        assert_eq!(set.binary.get(0, 0), 0.0);
    }
}
