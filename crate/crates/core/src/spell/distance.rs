/// Edit distance used for spelling suggestions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMetric {
    /// Optimal-string-alignment Damerau-Levenshtein: insert, delete,
    /// substitute and adjacent transposition, no substring edited twice.
    #[default]
    DamerauOsa,
    Levenshtein,
}

impl DistanceMetric {
    /// Distance between `a` and `b`, or `None` when it exceeds `max`.
    pub fn distance(self, a: &[char], b: &[char], max: usize) -> Option<usize> {
        if a.len().abs_diff(b.len()) > max {
            return None;
        }
        let d = match self {
            DistanceMetric::DamerauOsa => osa(a, b, max),
            DistanceMetric::Levenshtein => levenshtein(a, b, max),
        };
        (d <= max).then_some(d)
    }
}

// Three rolling rows; a row whose minimum already exceeds `max` ends the scan.
fn osa(a: &[char], b: &[char], max: usize) -> usize {
    let m = b.len();
    let mut two_back: Vec<usize> = (0..=m).collect();
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0; m + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        let mut row_min = cur[0];
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut v = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(two_back[j - 2] + 1);
            }
            cur[j] = v;
            row_min = row_min.min(v);
        }
        if row_min > max {
            return max + 1;
        }
        std::mem::swap(&mut two_back, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

fn levenshtein(a: &[char], b: &[char], max: usize) -> usize {
    let m = b.len();
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0; m + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        let mut row_min = cur[0];
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            cur[j] = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost);
            row_min = row_min.min(cur[j]);
        }
        if row_min > max {
            return max + 1;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}
