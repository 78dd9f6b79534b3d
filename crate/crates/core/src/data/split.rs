use rand::seq::SliceRandom;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::Prng;

/// Train/validation row indices, stratified by the (public, private) pair.
///
/// The validation size is `round(n · val_fraction)`; it is shared between
/// strata by largest remainder, so every stratum is within one sample of its
/// proportional share. If some stratum is too small to contribute even one
/// expected validation sample, the split falls back to an unstratified one.
pub fn split_indices(
    dataset: &LabeledDataset,
    val_fraction: f64,
    rng: &mut Prng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::usage(format!(
            "val_fraction must be in (0, 1), got {val_fraction}"
        )));
    }
    let n = dataset.len();
    let n_val = (n as f64 * val_fraction).round() as usize;

    let mut strata: [Vec<usize>; 4] = Default::default();
    for i in 0..n {
        let key = 2 * dataset.private_labels()[i] as usize + dataset.public_labels()[i] as usize;
        strata[key].push(i);
    }
    let stratifiable = strata
        .iter()
        .all(|s| s.is_empty() || s.len() as f64 * val_fraction >= 1.0);

    let mut val = Vec::with_capacity(n_val);
    if stratifiable {
        let quotas = largest_remainder(&strata.iter().map(Vec::len).collect::<Vec<_>>(), n_val);
        for (stratum, quota) in strata.iter_mut().zip(quotas) {
            stratum.shuffle(rng);
            val.extend_from_slice(&stratum[..quota]);
        }
    } else {
        log::warn!("a (public, private) stratum is too small to stratify; using an unstratified split");
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(rng);
        val.extend_from_slice(&all[..n_val]);
    }
    val.sort_unstable();
    let mut in_val = vec![false; n];
    for &i in &val {
        in_val[i] = true;
    }
    let train = (0..n).filter(|&i| !in_val[i]).collect();
    Ok((train, val))
}

fn largest_remainder(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return vec![0; sizes.len()];
    }
    let exact: Vec<f64> = sizes.iter().map(|&s| s as f64 * total as f64 / n as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = total - quotas.iter().sum::<usize>();
    for i in order {
        if left == 0 {
            break;
        }
        if quotas[i] < sizes[i] {
            quotas[i] += 1;
            left -= 1;
        }
    }
    quotas
}

/// Stratified train/validation split.
pub fn split(
    dataset: &LabeledDataset,
    val_fraction: f64,
    rng: &mut Prng,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, val) = split_indices(dataset, val_fraction, rng)?;
    Ok((dataset.subset(&train), dataset.subset(&val)))
}
