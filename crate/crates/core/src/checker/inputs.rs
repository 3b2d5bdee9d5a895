//! The space of related input pairs: enumeration and sampling.

use std::collections::BTreeSet;

use rand::Rng;

use crate::lang::ast::{is_reserved, live_inputs};
use crate::lang::{Cmd, Ident, Int, Memory, Value, VarMap};
use crate::semantics::Input;
use crate::transform::PhiSpec;

use super::config::GenConfig;
use super::CheckError;

/// An input location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Loc {
    Var(Ident),
    Cell(Int),
}

/// The input locations of a program, split into public and secret, each
/// with a finite domain.
#[derive(Debug, Clone)]
pub struct InputSpace {
    pub public: Vec<(Loc, (i64, i64))>,
    pub secret: Vec<(Loc, (i64, i64))>,
    pub phi: PhiSpec,
}

fn size_of(locs: &[(Loc, (i64, i64))]) -> u128 {
    locs.iter()
        .map(|(_, (lo, hi))| (hi - lo + 1).max(0) as u128)
        .fold(1u128, |a, b| a.saturating_mul(b))
}

fn assign(locs: &[(Loc, (i64, i64))], mut k: u128, vars: &mut VarMap, mem: &mut Memory) {
    for (loc, (lo, hi)) in locs {
        let n = (hi - lo + 1) as u128;
        let v = Value::int(lo + (k % n) as i64);
        k /= n;
        match loc {
            Loc::Var(x) => vars.set(x.clone(), v),
            Loc::Cell(a) => mem.write(a.clone(), v),
        }
    }
}

fn sample(locs: &[(Loc, (i64, i64))], rng: &mut impl Rng, vars: &mut VarMap, mem: &mut Memory) {
    for (loc, (lo, hi)) in locs {
        let v = Value::int(rng.gen_range(*lo..=*hi));
        match loc {
            Loc::Var(x) => vars.set(x.clone(), v),
            Loc::Cell(a) => mem.write(a.clone(), v),
        }
    }
}

impl InputSpace {
    /// Input variables are those the program may read before writing, plus
    /// those the constraints mention or the relation declares secret.
    /// Variables not declared public are secret. Directive and bookkeeping
    /// names are never inputs.
    pub fn new(body: &[Cmd], phi: &PhiSpec, cfg: &GenConfig) -> InputSpace {
        let mut names: BTreeSet<Ident> = live_inputs(body);
        for c in &phi.constraints {
            names.extend(c.vars());
        }
        names.extend(phi.secret_vars.iter().cloned());
        InputSpace::from_names(names, phi, cfg)
    }

    /// The input space of the original program of a product, recovered from
    /// the copy-1 names of the product.
    pub fn for_product(product_body: &[Cmd], phi: &PhiSpec, cfg: &GenConfig) -> InputSpace {
        let names: BTreeSet<Ident> = live_inputs(product_body)
            .into_iter()
            .filter_map(|x| x.strip_suffix("_1").map(Ident::new))
            .collect();
        InputSpace::from_names(names, phi, cfg)
    }

    fn from_names(names: BTreeSet<Ident>, phi: &PhiSpec, cfg: &GenConfig) -> InputSpace {
        let domain = |x: &Ident| phi.domains.get(x).copied().unwrap_or(cfg.domain);
        let names: BTreeSet<Ident> = names
            .into_iter()
            .filter(|x| !is_reserved(x) && &**x != "msf")
            .collect();
        let mut public = Vec::new();
        let mut secret = Vec::new();
        for x in &names {
            let entry = (Loc::Var(x.clone()), domain(x));
            if phi.public_vars.contains(x) {
                public.push(entry);
            } else {
                secret.push(entry);
            }
        }
        for c in phi.public_cells() {
            public.push((Loc::Cell(c), cfg.domain));
        }
        for c in phi.secret_cells() {
            secret.push((Loc::Cell(c), cfg.domain));
        }
        InputSpace { public, secret, phi: phi.clone() }
    }

    pub fn public_size(&self) -> u128 {
        size_of(&self.public)
    }

    pub fn secret_size(&self) -> u128 {
        size_of(&self.secret)
    }

    /// The `k`-th input with the `p`-th public part and `s`-th secret part.
    pub fn input_at(&self, p: u128, s: u128) -> Input {
        let mut vars = VarMap::new();
        let mut mem = Memory::new();
        assign(&self.public, p, &mut vars, &mut mem);
        assign(&self.secret, s, &mut vars, &mut mem);
        Input { vars, mem }
    }

    /// All inputs sharing the `p`-th public part that satisfy the
    /// constraints, in enumeration order.
    pub fn group(&self, p: u128) -> Vec<Input> {
        (0..self.secret_size())
            .map(|s| self.input_at(p, s))
            .filter(|i| self.phi.satisfies(i))
            .collect()
    }

    /// Draws a related pair of inputs. When secret locations exist the two
    /// inputs differ in at least one of them.
    pub fn gen_pair<R: Rng>(&self, rng: &mut R) -> Result<(Input, Input), CheckError> {
        const ATTEMPTS: usize = 10_000;
        for _ in 0..ATTEMPTS {
            let mut vars = VarMap::new();
            let mut mem = Memory::new();
            sample(&self.public, rng, &mut vars, &mut mem);
            if let Some(pair) = self.complete_pair(&vars, &mem, rng) {
                return Ok(pair);
            }
        }
        Err(CheckError::UnsatisfiablePhi)
    }

    fn complete_pair<R: Rng>(&self, pv: &VarMap, pm: &Memory, rng: &mut R) -> Option<(Input, Input)> {
        const ATTEMPTS: usize = 64;
        let draw = |rng: &mut R| {
            let mut vars = pv.clone();
            let mut mem = pm.clone();
            sample(&self.secret, rng, &mut vars, &mut mem);
            Input { vars, mem }
        };
        let first = (0..ATTEMPTS).map(|_| draw(rng)).find(|i| self.phi.satisfies(i))?;
        let mut fallback = None;
        for _ in 0..ATTEMPTS {
            let second = draw(rng);
            if !self.phi.satisfies(&second) {
                continue;
            }
            if second != first || self.secret.is_empty() {
                return Some((first, second));
            }
            fallback = Some(second);
        }
        // Only one satisfying secret may exist for this public part.
        fallback.map(|s| (first, s))
    }
}

/// Draws a related pair of inputs (see [`InputSpace::gen_pair`]).
pub fn gen_inputs(space: &InputSpace, rng: &mut impl Rng) -> Result<(Input, Input), CheckError> {
    space.gen_pair(rng)
}
