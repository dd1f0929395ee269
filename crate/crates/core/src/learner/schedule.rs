//! Restart schedules.

/// Phase lengths `θ_i = ⌈i² / V²⌉` with `V = v_r + v_p`, truncated to sum to `horizon`.
///
/// Zero variation yields a single phase covering the horizon.
pub fn variation_phase_lengths(v_r: f64, v_p: f64, horizon: usize) -> Vec<usize> {
    assert!(v_r >= 0.0 && v_p >= 0.0, "variation must be nonnegative");
    if horizon == 0 {
        return Vec::new();
    }
    let v = v_r + v_p;
    if v == 0.0 {
        return vec![horizon];
    }
    let v_sq = v * v;
    let mut lengths = Vec::new();
    let mut used = 0usize;
    for i in 1usize.. {
        let theta = ((i * i) as f64 / v_sq).ceil();
        let remaining = horizon - used;
        let theta = if theta >= remaining as f64 { remaining } else { theta as usize };
        lengths.push(theta);
        used += theta;
        if used == horizon {
            break;
        }
    }
    lengths
}

/// Distinct restart steps `⌈i³ / (L+1)²⌉ ∩ [1, horizon]`, ascending.
pub fn count_restart_steps(l_changes: usize, horizon: usize) -> Vec<usize> {
    let denom = (l_changes as u128 + 1).pow(2);
    let mut steps: Vec<usize> = Vec::new();
    for i in 1u128.. {
        let step = (i * i * i).div_ceil(denom);
        if step > horizon as u128 {
            break;
        }
        let step = step as usize;
        if steps.last() != Some(&step) {
            steps.push(step);
        }
    }
    steps
}

/// Converts ascending phase start steps into phase lengths over `1..=horizon`.
pub fn lengths_from_starts(starts: &[usize], horizon: usize) -> Vec<usize> {
    starts
        .iter()
        .enumerate()
        .map(|(i, &s)| starts.get(i + 1).copied().unwrap_or(horizon + 1) - s)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variation_schedule_examples() {
        assert_eq!(variation_phase_lengths(0.4, 0.6, 15), vec![1, 4, 9, 1]);
        assert_eq!(variation_phase_lengths(1.5, 0.5, 6), vec![1, 1, 3, 1]);
        assert_eq!(variation_phase_lengths(0.0, 0.0, 37), vec![37]);
        assert_eq!(variation_phase_lengths(1e-9, 0.0, 10), vec![10]);
    }

    #[test]
    fn count_schedule_examples() {
        assert_eq!(count_restart_steps(0, 30), vec![1, 8, 27]);
        assert_eq!(count_restart_steps(1, 20), vec![1, 2, 7, 16]);
        // ⌈1/16⌉ = ⌈8/16⌉ = 1 collapse into a single restart.
        assert_eq!(count_restart_steps(3, 4), vec![1, 2, 4]);
    }

    #[test]
    fn starts_to_lengths() {
        assert_eq!(lengths_from_starts(&[1, 8, 27], 30), vec![7, 19, 4]);
    }
}
