//! Homomorphism specs on the command line.
//!
//! `mod2`, `double`, `coord:<i>` and `quotient:<bits>,<bits>,...` (the
//! generators of the subgroup, one bit string per generator, coordinate 0
//! first). Stages are joined with `|` and applied left to right.

use anyhow::{anyhow, bail, Context, Result};
use entsum::{Elem, Homomorphism, SubgroupF2};

pub fn parse(spec: &str) -> Result<Homomorphism> {
    let stages = spec
        .split('|')
        .map(|s| stage(s.trim()).with_context(|| format!("in homomorphism spec {spec:?}")))
        .collect::<Result<Vec<_>>>()?;
    match stages.len() {
        0 => bail!("empty homomorphism spec"),
        1 => Ok(stages.into_iter().next().unwrap()),
        _ => Ok(Homomorphism::Compose(stages)),
    }
}

fn stage(s: &str) -> Result<Homomorphism> {
    let (head, arg) = match s.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (s, None),
    };
    match (head, arg) {
        ("mod2", None) => Ok(Homomorphism::Mod2),
        ("double", None) => Ok(Homomorphism::Double),
        ("coord", Some(i)) => Ok(Homomorphism::CoordProject(
            i.parse().with_context(|| format!("bad coordinate {i:?}"))?,
        )),
        ("quotient", Some(gens)) => quotient(gens),
        _ => bail!("unknown stage {s:?}; expected mod2, double, coord:<i> or quotient:<bits>,..."),
    }
}

fn quotient(gens: &str) -> Result<Homomorphism> {
    let rows: Vec<Vec<i64>> = gens
        .split(',')
        .map(|g| {
            g.trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(anyhow!("generator {g:?} is not a bit string")),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let dim = rows[0].len();
    if dim == 0 || rows.iter().any(|r| r.len() != dim) {
        bail!("quotient generators must be non-empty and of equal length");
    }
    let elems: Vec<Elem> = rows.iter().map(|r| Elem::new(r)).collect();
    Ok(Homomorphism::QuotientBy(SubgroupF2::span(dim, &elems)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages() {
        assert_eq!(parse("mod2").unwrap(), Homomorphism::Mod2);
        assert_eq!(parse("coord:1").unwrap(), Homomorphism::CoordProject(1));
        assert_eq!(
            parse("double | mod2").unwrap(),
            Homomorphism::Compose(vec![Homomorphism::Double, Homomorphism::Mod2])
        );
        match parse("quotient:110,011").unwrap() {
            Homomorphism::QuotientBy(h) => assert_eq!(h.rank(), 2),
            other => panic!("{other:?}"),
        }
        assert!(parse("quotient:11,1").is_err());
        assert!(parse("coord:x").is_err());
        assert!(parse("shift").is_err());
    }
}
