//! Run configuration: JSON file format with serde round-tripping. Flags
//! given on the command line override file fields.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsConfig {
    pub a_plus: f64,
    pub a_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub b_re: f64,
    #[serde(default)]
    pub b_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub truncation: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ParamsConfig,
    pub coupling: CouplingConfig,
    pub n: usize,
    #[serde(default)]
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_im: Option<Vec<f64>>,
    #[serde(default)]
    pub y: Vec<f64>,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_function")]
    pub function: String,
}

fn default_threads() -> usize {
    1
}

fn default_function() -> String {
    "e".into()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ParamsConfig {
                a_plus: 1.0,
                a_minus: 1.0,
            },
            coupling: CouplingConfig {
                b_re: 0.5,
                b_im: 0.0,
            },
            n: 1,
            x: vec![0.0],
            x_im: None,
            y: vec![0.0],
            tolerance: 1e-8,
            quadrature: None,
            output: None,
            seed: 1,
            threads: 1,
            function: "e".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_fields() {
        let cfg = RunConfig {
            params: ParamsConfig {
                a_plus: 1.25,
                a_minus: 0.8,
            },
            coupling: CouplingConfig {
                b_re: 0.7,
                b_im: 0.05,
            },
            n: 3,
            x: vec![0.3, -0.2, 0.1],
            x_im: Some(vec![0.0, 0.1, -0.1]),
            y: vec![1.0, 0.0, -1.0],
            tolerance: 1e-7,
            quadrature: Some(QuadratureConfig {
                truncation: 9.0,
                panels: 20,
                nodes_per_panel: 16,
            }),
            output: Some(OutputConfig {
                csv: Some("out.csv".into()),
                json: None,
            }),
            seed: 42,
            threads: 2,
            function: "j".into(),
        };
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        // and the serialized form is stable under one more cycle
        let again = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(text, again);
    }

    #[test]
    fn defaults_fill_in() {
        let minimal = r#"{
            "params": {"a_plus": 1.0, "a_minus": 1.0},
            "coupling": {"b_re": 0.5},
            "n": 1,
            "x": [0.5],
            "y": [2.0],
            "tolerance": 1e-8
        }"#;
        let cfg: RunConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(cfg.threads, 1);
        assert_eq!(cfg.function, "e");
        assert_eq!(cfg.coupling.b_im, 0.0);
    }
}
