use crate::error::{MeritError, Result};

/// Weighted least-squares nondecreasing fit by pooling adjacent violators.
pub fn pava_adjust(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(MeritError::Empty("values"));
    }
    if values.len() != weights.len() {
        return Err(MeritError::invalid(
            "weights",
            format!("length {} does not match {} values", weights.len(), values.len()),
        ));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(MeritError::invalid("weights", format!("{w} is not a positive finite weight")));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(MeritError::invalid("values", format!("{v} is not finite")));
    }

    // (weighted sum, total weight, length) per pooled block
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v * w, w, 1));
        while blocks.len() > 1 {
            let (s1, w1, _) = blocks[blocks.len() - 1];
            let (s0, w0, _) = blocks[blocks.len() - 2];
            if s0 / w0 <= s1 / w1 {
                break;
            }
            let (s, w, len) = blocks.pop().expect("two blocks");
            let last = blocks.last_mut().expect("two blocks");
            last.0 += s;
            last.1 += w;
            last.2 += len;
        }
    }
    Ok(blocks
        .into_iter()
        .flat_map(|(s, w, len)| std::iter::repeat_n(s / w, len))
        .collect())
}
