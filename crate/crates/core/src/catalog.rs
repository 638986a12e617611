//! Named constructors, looked up by the short names used on the command line.

use crate::broadcast::{antisym, canonical_b, classical_bcl, cloner, decoherence, family_b_lambda};
use crate::densemat::Operator;
use crate::error::{Error, Result};
use crate::hovm::{depolarizing_mp, exact_mp_map};
use crate::supermap::SuperMap;

pub trait NamedMap: Send + Sync {
    fn name(&self) -> &'static str;
    /// Alternative spellings accepted by [`named_map`].
    fn aliases(&self) -> &'static [&'static str] {
        &[]
    }
    fn summary(&self) -> &'static str;
    /// `lambda` is ignored by every entry except the `B_lambda` family.
    fn build(&self, d: usize, lambda: f64) -> Result<SuperMap>;
}

struct Entry {
    name: &'static str,
    aliases: &'static [&'static str],
    summary: &'static str,
    build: fn(usize, f64) -> Result<SuperMap>,
}

impl NamedMap for Entry {
    fn name(&self) -> &'static str {
        self.name
    }

    fn aliases(&self) -> &'static [&'static str] {
        self.aliases
    }

    fn summary(&self) -> &'static str {
        self.summary
    }

    fn build(&self, d: usize, lambda: f64) -> Result<SuperMap> {
        (self.build)(d, lambda)
    }
}

static ENTRIES: [Entry; 8] = [
    Entry { name: "B", aliases: &[], summary: "canonical virtual broadcaster", build: |d, _| canonical_b(d) },
    Entry { name: "B+", aliases: &["B⁺", "Bplus"], summary: "universal symmetric cloner", build: |d, _| cloner(d) },
    Entry { name: "B-", aliases: &["B⁻", "Bminus"], summary: "antisymmetric channel", build: |d, _| antisym(d) },
    Entry {
        name: "B_cl",
        aliases: &["Bcl"],
        summary: "classical broadcaster in the computational basis",
        build: |d, _| classical_bcl(d, &Operator::identity(d)),
    },
    Entry {
        name: "D",
        aliases: &[],
        summary: "decoherence in the computational basis",
        build: |d, _| decoherence(d, &Operator::identity(d)),
    },
    Entry {
        name: "B_lambda",
        aliases: &["B_λ", "Blambda"],
        summary: "broadcaster family, permutation invariant only at lambda = 0",
        build: family_b_lambda,
    },
    Entry { name: "M", aliases: &[], summary: "Haar measure-and-prepare map", build: |d, _| exact_mp_map(d) },
    Entry {
        name: "M'",
        aliases: &["M′", "Mprime"],
        summary: "completely depolarizing map into two copies",
        build: |d, _| depolarizing_mp(d),
    },
];

pub fn named_maps() -> Vec<&'static dyn NamedMap> {
    ENTRIES.iter().map(|e| e as &dyn NamedMap).collect()
}

pub fn map_names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}

pub fn named_map(name: &str) -> Result<&'static dyn NamedMap> {
    ENTRIES
        .iter()
        .find(|e| e.name == name || e.aliases.contains(&name))
        .map(|e| e as &dyn NamedMap)
        .ok_or_else(|| Error::UnknownName { name: name.to_string(), valid: map_names().join(", ") })
}

pub fn build_named(name: &str, d: usize, lambda: f64) -> Result<SuperMap> {
    named_map(name)?.build(d, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densemat::hermitian_eigenvalues;

    #[test]
    fn every_entry_builds() {
        for m in named_maps() {
            let map = m.build(2, 0.3).unwrap();
            assert_eq!(map.d_in(), 2, "{}", m.name());
            assert!(map.is_tp(1e-10), "{}", m.name());
        }
    }

    #[test]
    fn aliases_resolve() {
        assert_eq!(named_map("B⁺").unwrap().name(), "B+");
        assert_eq!(named_map("M′").unwrap().name(), "M'");
    }

    #[test]
    fn unknown_name_lists_valid() {
        let err = named_map("Q").err().unwrap().to_string();
        assert!(err.contains("B_cl") && err.contains("M'"), "{err}");
    }

    #[test]
    fn lambda_zero_is_canonical() {
        let b = build_named("B", 3, 0.0).unwrap();
        assert!(build_named("B_lambda", 3, 0.0).unwrap().max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn qubit_b_spectrum() {
        let mut ev = hermitian_eigenvalues(build_named("B", 2, 0.0).unwrap().choi()).unwrap();
        ev.iter_mut().for_each(|x| *x = (*x * 1e9).round() / 1e9);
        assert_eq!(ev, vec![1.5, 1.5, 0.0, 0.0, 0.0, 0.0, -0.5, -0.5]);
    }
}
