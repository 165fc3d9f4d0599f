use serde::{Deserialize, Serialize};

use super::{Layer, PacketJourney, StackError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayCdf {
    /// (delay ms, cumulative fraction), ascending.
    pub points: Vec<(f64, f64)>,
    pub fraction_within_bound: f64,
}

pub fn delay_cdf(journeys: &[PacketJourney], bound_ms: f64) -> Result<DelayCdf, StackError> {
    if journeys.is_empty() {
        return Err(StackError::Empty);
    }
    let mut d: Vec<f64> = journeys.iter().map(PacketJourney::total_ms).collect();
    d.sort_by(f64::total_cmp);
    let n = d.len() as f64;
    let points = d.iter().enumerate().map(|(i, &x)| (x, (i + 1) as f64 / n)).collect();
    let within = d.iter().filter(|&&x| x <= bound_ms).count() as f64 / n;
    Ok(DelayCdf { points, fraction_within_bound: within })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStat {
    pub layer: Layer,
    pub mean_ms: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci95_ms: f64,
}

pub fn layer_contributions(journeys: &[PacketJourney]) -> Result<Vec<LayerStat>, StackError> {
    if journeys.len() < 2 {
        return Err(StackError::TooFew { need: 2, got: journeys.len() });
    }
    let n = journeys.len() as f64;
    Ok(Layer::ALL
        .into_iter()
        .map(|layer| {
            let xs = journeys.iter().map(|j| j.residence_ms(layer));
            let mean = xs.clone().sum::<f64>() / n;
            let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            LayerStat { layer, mean_ms: mean, ci95_ms: 1.96 * (var / n).sqrt() }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(total_ms: u64) -> PacketJourney {
        PacketJourney {
            packet_id: 0,
            start_ns: 0,
            residence_ns: [0, 0, total_ms * 1_000_000, 0, 0],
            transmission_ns: 0,
            retransmissions: 0,
            segments: 1,
        }
    }

    #[test]
    fn all_within_bound() {
        let c = delay_cdf(&vec![j(5); 4], 10.0).unwrap();
        assert_eq!(c.fraction_within_bound, 1.0);
        assert_eq!(c.points.last().unwrap().1, 1.0);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(delay_cdf(&[], 10.0), Err(StackError::Empty)));
    }

    #[test]
    fn constant_residence_has_zero_ci() {
        let s = layer_contributions(&vec![j(3); 5]).unwrap();
        assert!(s.iter().all(|x| x.ci95_ms == 0.0));
        assert_eq!(s[Layer::Rlc.index()].mean_ms, 3.0);
    }
}
