//! Field-definition files (TOML).
//!
//! ```toml
//! weak_field_cap = 0.05      # optional, default 0.05
//! r_min = 1.0                # required > 0 for point-mass / dipole
//! domain = { lo = [-10, -10, -10], hi = [10, 10, 10] }
//!
//! [field]
//! family = "point-mass"      # harmonic-polynomial | point-mass |
//! mass = 0.02                # gravitomagnetic-dipole | superposition
//! center = [0, 0, 0]         # optional
//! ```
//!
//! `harmonic-polynomial` takes `phi = "<poly>"`, optional `g = ["..", "..", ".."]`
//! and optional `h = [[..3 strings..], ..]`; `gravitomagnetic-dipole` takes
//! `spin = [sx, sy, sz]`, `kappa` and optional `center`; `superposition` takes
//! `[[field.components]]` tables of the other families.

use serde::Deserialize;

use super::{make_field, Domain, FamilyParams, GeometryError, MetricModel, ScalarField, DEFAULT_CAP};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub field: FieldParams,
    pub domain: Domain,
    #[serde(default)]
    pub r_min: f64,
    #[serde(default = "default_cap")]
    pub weak_field_cap: f64,
}

fn default_cap() -> f64 {
    DEFAULT_CAP
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldParams {
    HarmonicPolynomial {
        phi: String,
        #[serde(default)]
        g: Option<[String; 3]>,
        #[serde(default)]
        h: Option<[[String; 3]; 3]>,
    },
    PointMass {
        mass: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    GravitomagneticDipole {
        spin: [f64; 3],
        kappa: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    Superposition {
        components: Vec<FieldParams>,
    },
}

impl FieldParams {
    pub fn to_family_params(&self) -> Result<FamilyParams, GeometryError> {
        let poly = |s: &String| ScalarField::parse_polynomial(s).map_err(GeometryError::from);
        Ok(match self {
            FieldParams::HarmonicPolynomial { phi, g, h } => FamilyParams::HarmonicPolynomial {
                phi: poly(phi)?,
                g: match g {
                    Some([a, b, c]) => Some([poly(a)?, poly(b)?, poly(c)?]),
                    None => None,
                },
                h: match h {
                    Some(rows) => {
                        let mut out: [[ScalarField; 3]; 3] = Default::default();
                        for i in 0..3 {
                            for j in 0..3 {
                                out[i][j] = poly(&rows[i][j])?;
                            }
                        }
                        Some(Box::new(out))
                    }
                    None => None,
                },
            },
            FieldParams::PointMass { mass, center } => FamilyParams::PointMass { mass: *mass, center: *center },
            FieldParams::GravitomagneticDipole { spin, kappa, center } => {
                FamilyParams::GravitomagneticDipole { spin: *spin, kappa: *kappa, center: *center }
            }
            FieldParams::Superposition { components } => {
                FamilyParams::Superposition(components.iter().map(|c| c.to_family_params()).collect::<Result<_, _>>()?)
            }
        })
    }
}

impl FieldFile {
    pub fn from_toml_str(text: &str) -> Result<FieldFile, GeometryError> {
        toml::from_str(text).map_err(|e| GeometryError::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<MetricModel, GeometryError> {
        make_field(&self.field.to_family_params()?, self.r_min, self.domain, self.weak_field_cap)
    }

    /// Builds the model skipping the harmonic, gauge and weak-field checks so
    /// a rejected file can still be diagnosed.
    pub fn build_unchecked(&self) -> Result<MetricModel, GeometryError> {
        let params = self.field.to_family_params()?;
        let h = params.raw_components(self.r_min)?;
        Ok(MetricModel::unchecked(params.family(), h, self.r_min, self.domain, self.weak_field_cap))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Family;

    #[test]
    fn point_mass_file() {
        let f = FieldFile::from_toml_str(
            "r_min = 1.0\ndomain = { lo = [-5, -5, -5], hi = [5, 5, 5] }\n[field]\nfamily = \"point-mass\"\nmass = 0.02\n",
        )
        .unwrap();
        let m = f.build().unwrap();
        assert_eq!(m.family(), Family::PointMass);
        assert_eq!(m.cap(), DEFAULT_CAP);
    }

    #[test]
    fn superposition_file() {
        let text = r#"
r_min = 1.0
domain = { lo = [-8, -8, -8], hi = [8, 8, 8] }
[field]
family = "superposition"
[[field.components]]
family = "point-mass"
mass = 0.01
[[field.components]]
family = "gravitomagnetic-dipole"
spin = [0, 0, 1]
kappa = 0.01
[[field.components]]
family = "harmonic-polynomial"
phi = "1e-4*x3"
"#;
        let m = FieldFile::from_toml_str(text).unwrap().build().unwrap();
        assert_eq!(m.family(), Family::Superposition);
    }

    #[test]
    fn precise_errors() {
        let unknown = FieldFile::from_toml_str(
            "domain = { lo = [0,0,0], hi = [1,1,1] }\n[field]\nfamily = \"point-mass\"\nmas = 1\n",
        )
        .unwrap_err();
        assert!(unknown.to_string().contains("mas"), "{unknown}");
        let family = FieldFile::from_toml_str("domain = { lo = [0,0,0], hi = [1,1,1] }\n[field]\nfamily = \"kerr\"\n")
            .unwrap_err();
        assert!(family.to_string().contains("kerr"), "{family}");
        let poly = FieldFile::from_toml_str(
            "domain = { lo = [0,0,0], hi = [1,1,1] }\n[field]\nfamily = \"harmonic-polynomial\"\nphi = \"x1 +\"\n",
        )
        .unwrap()
        .build()
        .unwrap_err();
        assert!(matches!(poly, GeometryError::Poly(_)));
    }

    #[test]
    fn unchecked_build_keeps_a_non_harmonic_field() {
        let file = FieldFile::from_toml_str(
            "domain = { lo = [-1,-1,-1], hi = [1,1,1] }\n[field]\nfamily = \"harmonic-polynomial\"\nphi = \"x1^2\"\n",
        )
        .unwrap();
        assert!(matches!(file.build(), Err(GeometryError::NotHarmonic { .. })));
        let model = file.build_unchecked().unwrap();
        let res = crate::geometry::potential_residuals(&model, &[[0.3, 0.1, -0.2]]).unwrap();
        assert_eq!(res[0].0, "phi");
        assert_eq!(res[0].1.max_abs, 2.0);
    }
}
