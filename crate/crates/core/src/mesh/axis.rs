//! Graded one-dimensional node sequences.

/// Node positions on `[breaks[0], breaks[last]]` with every break a node.
///
/// Element size grows geometrically with the distance to `focus`, from
/// `h_min` up to `h`; `grading == 1` gives uniform size `h`. Each interval
/// between consecutive breaks is meshed independently, so the axis for a
/// prefix of `breaks` is a prefix of the full axis.
pub fn graded_axis(breaks: &[f64], focus: f64, h: f64, grading: f64, h_min: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let interior = if b <= focus {
            let mut pts = march(focus - b, focus - a, h, grading, h_min);
            pts.reverse();
            pts.into_iter().map(|x| focus - x).collect::<Vec<_>>()
        } else {
            march((a - focus).max(0.0), b - focus, h, grading, h_min).into_iter().map(|x| focus + x).collect()
        };
        // interior excludes both ends
        out.extend(interior);
        out.push(b);
    }
    out
}

fn size_at(dist: f64, h: f64, grading: f64, h_min: f64) -> f64 {
    if grading <= 1.0 {
        h
    } else {
        (h_min + (grading - 1.0) * dist).min(h)
    }
}

/// Interior points strictly between distances `a < b` from the focus.
fn march(a: f64, b: f64, h: f64, grading: f64, h_min: f64) -> Vec<f64> {
    let len = b - a;
    if grading <= 1.0 {
        let k = ((len / h) - 1e-9).ceil().max(1.0) as usize;
        return (1..k).map(|i| a + len * i as f64 / k as f64).collect();
    }
    let mut pts = vec![a];
    let mut x = a;
    loop {
        let next = x + size_at(x, h, grading, h_min);
        if next >= b {
            // keep whichever of x or next lands closer to b, then stretch
            if next - b < b - x || pts.len() == 1 {
                pts.push(next);
            }
            break;
        }
        pts.push(next);
        x = next;
    }
    let last = *pts.last().unwrap();
    let scale = len / (last - a);
    let k = pts.len() - 1;
    pts.iter().take(k).skip(1).map(|x| a + (x - a) * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_axis_hits_breaks() {
        let ax = graded_axis(&[0.0, 1.0, 4.0], 1.0, 0.5, 1.0, 0.5 / 32.0);
        assert_eq!(ax, vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]);
    }

    #[test]
    fn prefix_property() {
        let full = graded_axis(&[0.0, 1.0, 2.0, 4.0, 8.0], 1.0, 0.25, 1.15, 0.25 / 32.0);
        let part = graded_axis(&[0.0, 1.0, 2.0, 4.0], 1.0, 0.25, 1.15, 0.25 / 32.0);
        assert_eq!(&full[..part.len()], &part[..]);
    }

    #[test]
    fn graded_axis_is_fine_near_focus() {
        let ax = graded_axis(&[0.0, 1.0, 3.0], 1.0, 0.25, 1.15, 0.25 / 32.0);
        assert!(ax.windows(2).all(|w| w[1] > w[0]));
        let i = ax.iter().position(|&x| x == 1.0).unwrap();
        assert!(ax[i + 1] - ax[i] < 0.02);
        assert!(ax[i] - ax[i - 1] < 0.02);
        let last = ax[ax.len() - 1] - ax[ax.len() - 2];
        assert!(last > 0.2 && last < 0.3);
    }
}
