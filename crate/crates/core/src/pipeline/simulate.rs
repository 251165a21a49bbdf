use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fock::{FockBasis, FockState};
use crate::interferometer::CircuitSpec;
use crate::qml::QmlError;
use crate::simulator::{ideal_distribution, noisy_distribution, Detector, NoiseModel, OutcomeSpace};

/// Input of the `simulate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    pub circuit: CircuitSpec,
    pub input_state: FockState,
    #[serde(default)]
    pub theta1: Vec<f64>,
    #[serde(default)]
    pub theta2: Vec<f64>,
    #[serde(default)]
    pub features: Vec<f64>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub detector: Detector,
}

/// Exact output distribution of a request. Threshold requests also carry
/// the click-pattern marginals.
pub fn simulate_request(req: &SimulateRequest) -> Result<serde_json::Value, QmlError> {
    if req.input_state.modes() != req.circuit.modes() {
        return Err(QmlError::Configuration(format!(
            "input state over {} modes for a {}-mode circuit",
            req.input_state.modes(),
            req.circuit.modes()
        )));
    }
    let u = req.circuit.build_unitary(&req.theta1, &req.theta2, &req.features)?;
    let basis = Arc::new(FockBasis::enumerate(req.input_state.photons(), req.circuit.modes())?);
    let dist = if req.noise.indistinguishability() == 1.0 {
        ideal_distribution(&u, &req.input_state, &basis)?
    } else {
        noisy_distribution(&u, &req.input_state, &basis, &req.noise)?
    };
    let mut out = dist.to_json();
    if req.detector == Detector::Threshold {
        let space = OutcomeSpace::new(basis, Detector::Threshold);
        let clicks: Vec<_> = space
            .patterns()
            .iter()
            .zip(space.collapse(&dist))
            .map(|(p, prob)| serde_json::json!({ "clicks": p.as_bits(), "probability": prob }))
            .collect();
        out["clicks"] = serde_json::Value::Array(clicks);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hom() -> SimulateRequest {
        serde_json::from_str(include_str!("../../fixtures/hom_circuit.json")).unwrap()
    }

    fn prob(out: &serde_json::Value, state: &[usize]) -> f64 {
        out["outcomes"]
            .as_array()
            .unwrap()
            .iter()
            .find(|o| o["state"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).eq(state.iter().copied()))
            .unwrap()["probability"]
            .as_f64()
            .unwrap()
    }

    #[test]
    fn hom_fixture() {
        let out = simulate_request(&hom()).unwrap();
        assert!(prob(&out, &[1, 1]).abs() < 1e-12);
        assert!((prob(&out, &[2, 0]) - 0.5).abs() < 1e-12);

        let mut noisy = hom();
        noisy.noise = NoiseModel::new(0.0, 0.92).unwrap();
        noisy.detector = Detector::Threshold;
        let out = simulate_request(&noisy).unwrap();
        assert!((prob(&out, &[1, 1]) - 0.0768).abs() < 1e-12);
        assert_eq!(out["clicks"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn mismatched_input() {
        let mut r = hom();
        r.input_state = FockState::new(vec![1, 0, 1]);
        assert!(simulate_request(&r).is_err());
    }
}
