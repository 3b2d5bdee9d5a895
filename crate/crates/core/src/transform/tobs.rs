//! The observation transformation relating source traces to the traces of
//! their speculation-passing translation: every branch observation is
//! followed by an echo of the directive that was used at that branch.

use crate::semantics::{Directive, Observation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TObsError {
    #[error("branch observation {index} has no matching force directive")]
    MissingDirective { index: usize },
    #[error("observation {index} is not a valid directive echo")]
    BadEcho { index: usize },
}

fn forces(d: &[Directive]) -> impl Iterator<Item = bool> + '_ {
    d.iter().filter_map(|d| match d {
        Directive::Force(b) => Some(*b),
        Directive::Load(_) => None,
    })
}

/// Inserts directive echoes after every branch observation. Load
/// directives produce no echo.
pub fn t_obs(o: &[Observation], d: &[Directive]) -> Result<Vec<Observation>, TObsError> {
    let mut fs = forces(d);
    let mut out = Vec::with_capacity(o.len() * 2);
    for (index, ob) in o.iter().enumerate() {
        out.push(ob.clone());
        if let Observation::Branch(_) = ob {
            let b = fs.next().ok_or(TObsError::MissingDirective { index })?;
            out.push(Observation::Branch(b));
        }
    }
    Ok(out)
}

/// Like [`t_obs`], but a final branch observation without a directive is
/// kept without an echo. This is the trace of a run that stopped for lack
/// of a directive right after observing the branch condition.
pub fn t_obs_truncated(o: &[Observation], d: &[Directive]) -> Result<Vec<Observation>, TObsError> {
    match t_obs(o, d) {
        Err(TObsError::MissingDirective { index }) if index + 1 == o.len() => {
            let mut out = t_obs(&o[..index], d)?;
            out.push(o[index].clone());
            Ok(out)
        }
        r => r,
    }
}

/// Removes directive echoes, checking them against `d`.
pub fn t_obs_inv(t: &[Observation], d: &[Directive]) -> Result<Vec<Observation>, TObsError> {
    let mut fs = forces(d);
    let mut out = Vec::with_capacity(t.len());
    let mut i = 0;
    while i < t.len() {
        out.push(t[i].clone());
        if let Observation::Branch(_) = t[i] {
            let want = fs.next().ok_or(TObsError::MissingDirective { index: i })?;
            match t.get(i + 1) {
                Some(Observation::Branch(b)) if *b == want => i += 2,
                _ => return Err(TObsError::BadEcho { index: i + 1 }),
            }
        } else {
            i += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Int;
    use Directive::*;
    use Observation::*;

    #[test]
    fn echoes_follow_branches() {
        let o = [Branch(true), Addr(Int::small(5)), Branch(false)];
        let d = [Force(false), Load(1), Force(true)];
        let t = t_obs(&o, &d).unwrap();
        assert_eq!(
            t,
            [Branch(true), Branch(false), Addr(Int::small(5)), Branch(false), Branch(true)]
        );
        assert_eq!(t_obs_inv(&t, &d).unwrap(), o);
    }

    #[test]
    fn missing_directives() {
        let o = [Branch(true), Branch(false)];
        assert_eq!(t_obs(&o, &[Force(true)]), Err(TObsError::MissingDirective { index: 1 }));
        assert_eq!(
            t_obs_truncated(&o, &[Force(true)]).unwrap(),
            [Branch(true), Branch(true), Branch(false)]
        );
        assert!(t_obs_truncated(&o, &[]).is_err());
    }

    #[test]
    fn inverse_rejects_bad_echoes() {
        let d = [Force(true)];
        assert!(t_obs_inv(&[Branch(true), Branch(false)], &d).is_err());
        assert!(t_obs_inv(&[Branch(true)], &d).is_err());
        assert!(t_obs_inv(&[Branch(true), Addr(Int::ONE)], &d).is_err());
    }
}
