/// Largest-remainder (Hamilton) apportionment of `total` units to `quotas`.
///
/// Each share gets `floor(quota)`; leftover units go to the largest fractional
/// remainders, ties to the lower index. Quotas are expected to sum to `total`
/// up to rounding.
pub fn largest_remainder(quotas: &[f64], total: usize) -> Vec<usize> {
    let mut shares: Vec<usize> = quotas.iter().map(|q| q.max(0.0).floor() as usize).collect();
    let assigned: usize = shares.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    let rem = |i: usize| quotas[i].max(0.0) - quotas[i].max(0.0).floor();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (rem(a), rem(b));
        if (ra - rb).abs() <= 1e-9 {
            a.cmp(&b)
        } else {
            rb.total_cmp(&ra)
        }
    });
    if assigned < total {
        for &i in order.iter().cycle().take(total - assigned) {
            shares[i] += 1;
        }
    } else if assigned > total {
        // Only reachable with inconsistent quotas; trim from the smallest remainders.
        let mut excess = assigned - total;
        for &i in order.iter().rev().cycle() {
            if excess == 0 {
                break;
            }
            if shares[i] > 0 {
                shares[i] -= 1;
                excess -= 1;
            }
        }
    }
    shares
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fractions_reproduce_counts() {
        let counts = [176.0, 138.0, 183.0, 656.0];
        let quotas: Vec<f64> = counts.iter().map(|c| c / 1153.0 * 1153.0).collect();
        assert_eq!(largest_remainder(&quotas, 1153), vec![176, 138, 183, 656]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        assert_eq!(largest_remainder(&[0.5, 0.5, 0.5, 0.5], 2), vec![1, 1, 0, 0]);
        assert_eq!(largest_remainder(&[35.2, 27.6, 36.6, 131.2], 231), vec![35, 28, 37, 131]);
    }
}
