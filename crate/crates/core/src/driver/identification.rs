use super::record::IterationRecord;

/// Index of the first entry from which the sequence is constant through its
/// end. `None` when the final value only appears in the last entry of a
/// sequence with more than one entry, since nothing then confirms it held.
pub fn stabilization_index<S: PartialEq>(seq: &[S]) -> Option<usize> {
    let last = seq.last()?;
    let mut start = seq.len() - 1;
    while start > 0 && seq[start - 1] == *last {
        start -= 1;
    }
    if start == seq.len() - 1 && seq.len() > 1 {
        None
    } else {
        Some(start)
    }
}

/// Stabilization iterations of the active set and of the sign pattern of
/// the regularized variables over a completed run. A run that ends at a
/// KKT point confirms its final pattern, so a change on the last record
/// still counts as stabilized there.
pub fn identification_trackers(
    records: &[IterationRecord],
    converged: bool,
) -> (Option<usize>, Option<usize>) {
    let active: Vec<&str> = records.iter().map(|r| r.active_set.as_str()).collect();
    let signs: Vec<&str> = records.iter().map(|r| r.sign_pattern.as_str()).collect();
    let index = |seq: &[&str]| {
        if converged && !seq.is_empty() {
            let last = seq[seq.len() - 1];
            Some(seq.iter().rposition(|s| *s != last).map_or(0, |i| i + 1))
        } else {
            stabilization_index(seq)
        }
    };
    let at = |i: Option<usize>| i.map(|i| records[i].k);
    (at(index(&active)), at(index(&signs)))
}
