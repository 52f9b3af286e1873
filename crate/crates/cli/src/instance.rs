use std::path::Path;

use mupricing::oracle::DiscreteInstance;
use mupricing::{Marginal, MarginalKind, ProblemInstance};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Marginal as written in an instance file; the top value comes from the
/// file's `v_bar`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarginalSpec {
    Uniform {
        a: f64,
        b: f64,
    },
    ConstantElasticity {
        a: f64,
        epsilon: f64,
    },
    TruncatedNormal {
        mu: f64,
        sigma: f64,
    },
    ExponentialTruncated {
        lambda: f64,
    },
    PiecewiseLinearCdf {
        knots: Vec<(f64, f64)>,
    },
    Mixture {
        components: Vec<MarginalSpec>,
        weights: Vec<f64>,
    },
}

impl MarginalSpec {
    pub fn build(&self, v_bar: f64) -> mupricing::Result<Marginal> {
        let kind = match self {
            MarginalSpec::Uniform { a, b } => MarginalKind::Uniform { a: *a, b: *b },
            MarginalSpec::ConstantElasticity { a, epsilon } => MarginalKind::ConstantElasticity {
                a: *a,
                epsilon: *epsilon,
            },
            MarginalSpec::TruncatedNormal { mu, sigma } => MarginalKind::TruncatedNormal { mu: *mu, sigma: *sigma },
            MarginalSpec::ExponentialTruncated { lambda } => MarginalKind::ExponentialTruncated { lambda: *lambda },
            MarginalSpec::PiecewiseLinearCdf { knots } => MarginalKind::PiecewiseLinearCdf { knots: knots.clone() },
            MarginalSpec::Mixture { components, weights } => {
                let comps = components
                    .iter()
                    .map(|c| c.build(v_bar))
                    .collect::<mupricing::Result<Vec<_>>>()?;
                return Marginal::mixture(comps, weights.clone());
            }
        };
        Marginal::new(kind, v_bar)
    }

    pub fn from_marginal(m: &Marginal) -> Self {
        match m.kind() {
            MarginalKind::Uniform { a, b } => MarginalSpec::Uniform { a: *a, b: *b },
            MarginalKind::ConstantElasticity { a, epsilon } => MarginalSpec::ConstantElasticity {
                a: *a,
                epsilon: *epsilon,
            },
            MarginalKind::TruncatedNormal { mu, sigma } => MarginalSpec::TruncatedNormal { mu: *mu, sigma: *sigma },
            MarginalKind::ExponentialTruncated { lambda } => MarginalSpec::ExponentialTruncated { lambda: *lambda },
            MarginalKind::PiecewiseLinearCdf { knots } => MarginalSpec::PiecewiseLinearCdf { knots: knots.clone() },
            MarginalKind::Mixture { components, weights } => MarginalSpec::Mixture {
                components: components.iter().map(MarginalSpec::from_marginal).collect(),
                weights: weights.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteBlock {
    pub types: Vec<(f64, u64)>,
    pub probs: Vec<f64>,
}

/// JSON instance file. The continuous part (`demands`, `weights`, `v_bar`,
/// `marginals`) and the `discrete` block are each optional, but a file must
/// carry at least one of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demands: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginals: Option<Vec<MarginalSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrete: Option<DiscreteBlock>,
}

/// A validated instance file.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub file: InstanceFile,
    pub problem: Option<ProblemInstance>,
    pub discrete: Option<DiscreteInstance>,
}

impl InstanceFile {
    pub fn from_problem(inst: &ProblemInstance) -> Self {
        InstanceFile {
            demands: Some(inst.demands().to_vec()),
            weights: Some(inst.weights().to_vec()),
            v_bar: Some(inst.v_bar()),
            marginals: Some(inst.marginals().iter().map(MarginalSpec::from_marginal).collect()),
            discrete: None,
        }
    }

    pub fn parse(text: &str) -> Result<Loaded, CliError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("parse error: {e}")))?;
        file.validate()
    }

    pub fn read(path: &Path) -> Result<Loaded, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(self) -> Result<Loaded, CliError> {
        let invalid = |e: mupricing::Error| CliError::Input(format!("invalid instance: {e}"));
        let problem = match (&self.demands, &self.weights, self.v_bar, &self.marginals) {
            (None, None, None, None) => None,
            (Some(d), Some(w), Some(vb), Some(ms)) => {
                let marginals = ms
                    .iter()
                    .map(|m| m.build(vb))
                    .collect::<mupricing::Result<Vec<_>>>()
                    .map_err(invalid)?;
                Some(ProblemInstance::new(d.clone(), w.clone(), marginals, vb).map_err(invalid)?)
            }
            _ => {
                return Err(CliError::Input(
                    "demands, weights, v_bar and marginals must be given together".into(),
                ))
            }
        };
        let discrete = match &self.discrete {
            Some(b) => Some(DiscreteInstance::new(b.types.clone(), b.probs.clone()).map_err(invalid)?),
            None => None,
        };
        if problem.is_none() && discrete.is_none() {
            return Err(CliError::Input("instance file is empty".into()));
        }
        Ok(Loaded {
            file: self,
            problem,
            discrete,
        })
    }

    /// Canonical serialization; the report digest is taken over it.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

impl Loaded {
    pub fn problem(&self) -> Result<&ProblemInstance, CliError> {
        self.problem
            .as_ref()
            .ok_or_else(|| CliError::Input("this command needs demands, weights, v_bar and marginals".into()))
    }

    pub fn discrete(&self) -> Result<&DiscreteInstance, CliError> {
        self.discrete
            .as_ref()
            .ok_or_else(|| CliError::Input("this command needs a discrete block".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "demands": [1, 2],
        "weights": [0.5, 0.5],
        "v_bar": 1.0,
        "marginals": [
            {"kind": "uniform", "a": 0.0, "b": 1.0},
            {"kind": "mixture", "components": [
                {"kind": "uniform", "a": 0.0, "b": 1.0},
                {"kind": "exponential_truncated", "lambda": 1.0}
            ], "weights": [0.5, 0.5]}
        ],
        "discrete": {"types": [[1.0, 3], [1.0, 2], [6.0, 1]], "probs": [0.25, 0.25, 0.5]}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let loaded = InstanceFile::parse(EXAMPLE).unwrap();
        assert_eq!(loaded.problem().unwrap().k(), 2);
        assert_eq!(loaded.discrete().unwrap().len(), 3);
        let again = InstanceFile::parse(&loaded.file.to_json()).unwrap();
        assert_eq!(again.file, loaded.file);
        assert_eq!(again.problem, loaded.problem);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = EXAMPLE.replacen("\"v_bar\"", "\"vbar\": 1.0, \"v_bar\"", 1);
        assert!(matches!(InstanceFile::parse(&bad), Err(CliError::Input(_))));
        let bad = EXAMPLE.replacen("\"b\": 1.0}", "\"b\": 1.0, \"c\": 2.0}", 1);
        assert!(InstanceFile::parse(&bad).is_err());
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = InstanceFile::parse("{\n  \"demands\": [1,\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn partial_continuous_part_is_rejected() {
        assert!(InstanceFile::parse(r#"{"demands": [1]}"#).is_err());
        assert!(InstanceFile::parse("{}").is_err());
        assert!(InstanceFile::parse(r#"{"discrete": {"types": [[1.0, 1]], "probs": [1.0]}}"#).is_ok());
    }

    #[test]
    fn validation_mirrors_core() {
        let bad = EXAMPLE.replace(
            "\"weights\": [0.5, 0.5],\n        \"v_bar\"",
            "\"weights\": [0.5, 0.6],\n        \"v_bar\"",
        );
        assert!(InstanceFile::parse(&bad).is_err());
        let bad = EXAMPLE.replace("\"probs\": [0.25, 0.25, 0.5]", "\"probs\": [0.25, 0.25, 0.6]");
        assert!(InstanceFile::parse(&bad).is_err());
    }
}
