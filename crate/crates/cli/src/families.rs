//! Maps family names from the command line to concrete instances.

use anyhow::{bail, Context, Result};
use onfair_core::generators::{
    example_fixture, like_adversary, lower_triangular, random_instance, upper_triangular,
    FixtureParams,
};
use onfair_core::instance::UtilityRegime;
use onfair_core::Instance;

/// Everything needed to build one instance from CLI arguments.
#[derive(Clone, Debug)]
pub struct FamilyRequest {
    pub family: String,
    pub n: Option<usize>,
    pub m: Option<usize>,
    /// The large-utility knob for the third example fixture.
    pub u: Option<i64>,
    pub seed: u64,
}

impl FamilyRequest {
    pub fn new(family: &str) -> Self {
        FamilyRequest {
            family: family.to_string(),
            n: None,
            m: None,
            u: None,
            seed: 42,
        }
    }

    fn n_or(&self, default: usize) -> usize {
        self.n.unwrap_or(default)
    }

    pub fn build(&self) -> Result<Instance> {
        let inst = match self.family.as_str() {
            "upper-triangular" => upper_triangular(self.n_or(3)),
            "lower-triangular" => lower_triangular(self.n_or(3)),
            "like-adversary" => like_adversary(self.n_or(100))
                .with_context(|| "building the adversarial family")?,
            "random-binary" | "random-general" => {
                let n = self.n_or(3);
                let m = self.m.unwrap_or(n);
                let regime = if self.family == "random-binary" {
                    UtilityRegime::Binary
                } else {
                    UtilityRegime::General
                };
                random_instance(n, m, regime, self.seed)
            }
            other => {
                let Some(id) = other
                    .strip_prefix("example-")
                    .and_then(|s| s.parse::<usize>().ok())
                else {
                    bail!(
                        "unknown family `{other}` (expected upper-triangular, lower-triangular, \
                         like-adversary, random-binary, random-general, or example-1..example-5)"
                    );
                };
                example_fixture(
                    id,
                    FixtureParams {
                        n: self.n,
                        u: self.u,
                    },
                )
                .with_context(|| format!("building fixture {id}"))?
            }
        };
        Ok(inst)
    }
}

/// The canonical family names accepted by `--family`.
pub const FAMILY_NAMES: &[&str] = &[
    "upper-triangular",
    "lower-triangular",
    "like-adversary",
    "random-binary",
    "random-general",
    "example-1",
    "example-2",
    "example-3",
    "example-4",
    "example-5",
];
