//! Instantiation of a [`NetworkConfig`] into a runnable [`Network`].

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{LinkPolicy, LinkSpec, NetworkConfig, RangeSpec};
use crate::activity::{ActivityTime, GatingWeight};
use crate::error::{Error, Result};
use crate::network::{Network, Receptor, Section};
use crate::neuron::SectionParams;
use crate::plasticity::{LearningState, PlasticityParams};
use crate::scalar::Scalar;
use crate::synapse::{Source, Synapse, SynapseKind};

/// Default dopamine plasticity rate.
pub const DEFAULT_D_DOPAMINE: f64 = 0.0186;
/// Default ratio of the anti-Hebbian rate to the dopamine rate.
pub const DEFAULT_HEBBIAN_RATIO: f64 = 0.582;

/// Shape of one end of a link as seen by [`expand_link_policy`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Endpoint {
    pub per_column: usize,
    pub columns: usize,
    /// A single block visible from every column (global receptors).
    pub shared: bool,
}

impl Endpoint {
    pub fn column(per_column: usize, columns: usize) -> Self {
        Endpoint {
            per_column,
            columns,
            shared: false,
        }
    }

    pub fn shared(n: usize) -> Self {
        Endpoint {
            per_column: n,
            columns: 1,
            shared: true,
        }
    }

    fn block(&self, column: usize) -> std::ops::Range<usize> {
        let c = if self.shared { 0 } else { column };
        c * self.per_column..(c + 1) * self.per_column
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandOptions {
    /// `all-to-all-sections` links span every column instead of one.
    pub cross_column_lateral: bool,
    /// `all-to-all-sections` links include each neuron's link to itself.
    pub lateral_self: bool,
}

impl Default for ExpandOptions {
    fn default() -> Self {
        ExpandOptions {
            cross_column_lateral: true,
            lateral_self: true,
        }
    }
}

/// Resolves a link policy into `(pre, post)` pairs of local indices
/// (`column * per_column + i`).
///
/// `same_group` marks a link from a section to itself; dense links then skip
/// self-pairs.
pub fn expand_link_policy<R: Rng + ?Sized>(
    link: &LinkSpec,
    src: Endpoint,
    dst: Endpoint,
    same_group: bool,
    options: &ExpandOptions,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let mismatch = |m: String| Error::InvalidLink {
        from: link.from.clone(),
        to: link.to.clone(),
        message: m,
    };
    let columns_match = src.shared || src.columns == dst.columns;
    let mut pairs = Vec::new();
    match link.policy {
        LinkPolicy::Dense => {
            if !columns_match {
                return Err(mismatch(format!(
                    "{} source columns for {} target columns",
                    src.columns, dst.columns
                )));
            }
            let p = link.probability.unwrap_or(1.0);
            let cap = link.maxnpre.unwrap_or(usize::MAX);
            for c in 0..dst.columns {
                for post in dst.block(c) {
                    let mut pres: Vec<usize> = src
                        .block(c)
                        .filter(|&pre| !(same_group && pre == post))
                        .filter(|_| p >= 1.0 || rng.gen_bool(p))
                        .collect();
                    if pres.len() > cap {
                        pres.shuffle(rng);
                        pres.truncate(cap);
                        pres.sort_unstable();
                    }
                    pairs.extend(pres.into_iter().map(|pre| (pre, post)));
                }
            }
        }
        LinkPolicy::Aligned => {
            if !columns_match {
                return Err(mismatch(format!(
                    "aligned link between {} and {} columns",
                    src.columns, dst.columns
                )));
            }
            let (ns, nt) = (src.per_column, dst.per_column);
            for c in 0..dst.columns {
                let (sb, tb) = (src.block(c).start, dst.block(c).start);
                if ns == nt {
                    pairs.extend((0..ns).map(|i| (sb + i, tb + i)));
                } else if ns == 1 {
                    pairs.extend((0..nt).map(|j| (sb, tb + j)));
                } else if nt < ns && ns % nt == 0 {
                    pairs.extend((0..ns).map(|i| (sb + i, tb + i % nt)));
                } else {
                    return Err(mismatch(format!("cannot align {ns} neurons with {nt}")));
                }
            }
        }
        LinkPolicy::AllToAllSections => {
            let groups: Vec<(Vec<usize>, Vec<usize>)> =
                if options.cross_column_lateral || src.shared {
                    vec![(
                        (0..src.per_column * src.columns).collect(),
                        (0..dst.per_column * dst.columns).collect(),
                    )]
                } else {
                    if !columns_match {
                        return Err(mismatch(format!(
                            "per-column lateral link between {} and {} columns",
                            src.columns, dst.columns
                        )));
                    }
                    (0..dst.columns)
                        .map(|c| (src.block(c).collect(), dst.block(c).collect()))
                        .collect()
                };
            for (pres, posts) in groups {
                for &pre in &pres {
                    for &post in &posts {
                        if same_group && pre == post && !options.lateral_self {
                            continue;
                        }
                        pairs.push((pre, post));
                    }
                }
            }
        }
        LinkPolicy::Exclusive => {
            if src.shared || src.columns != dst.columns {
                return Err(mismatch(
                    "exclusive link needs column-scoped endpoints".into(),
                ));
            }
            for c in 0..src.columns {
                for pre in src.block(c) {
                    for d in (0..dst.columns).filter(|&d| d != c) {
                        pairs.extend(dst.block(d).map(|post| (pre, post)));
                    }
                }
            }
        }
    }
    Ok(pairs)
}

/// Replacement values for the plasticity parameters of plastic sections.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlasticityOverrides {
    pub d_dopamine: Option<f64>,
    /// `d_hebbian / d_dopamine`.
    pub hebbian_ratio: Option<f64>,
    pub w_min: Option<f64>,
    pub w_max: Option<f64>,
    pub alpha: Option<f64>,
    pub n_silent: Option<usize>,
    pub initial_resource: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub seed: u64,
    pub plasticity: PlasticityOverrides,
    /// Resizes the plastic section and every section of the same size.
    pub microcolumns: Option<usize>,
    pub expand: ExpandOptions,
}

impl BuildOptions {
    pub fn seeded(seed: u64) -> Self {
        BuildOptions {
            seed,
            ..BuildOptions::default()
        }
    }
}

fn sample(range: &RangeSpec, rng: &mut ChaCha8Rng) -> f64 {
    if range.max > range.min {
        rng.gen_range(range.min..=range.max)
    } else {
        range.min
    }
}

/// Applies the microcolumn override to a copy of the config.
pub fn resize_microcolumns(config: &NetworkConfig, microcolumns: usize) -> Result<NetworkConfig> {
    if microcolumns == 0 {
        return Err(Error::InvalidConfig(
            "microcolumn count must be at least 1".into(),
        ));
    }
    let mut config = config.clone();
    let Some(n) = config.plastic_section().map(|s| s.n) else {
        return Err(Error::InvalidConfig("no plastic section to resize".into()));
    };
    for s in &mut config.sections {
        if s.n == n {
            s.n = microcolumns;
        }
    }
    Ok(config)
}

fn plasticity_params<T: Scalar>(
    config: &NetworkConfig,
    spec: &super::config::PlasticitySpec,
    chartime: f64,
    o: &PlasticityOverrides,
) -> Result<PlasticityParams<T>> {
    let d_dopamine = o.d_dopamine.unwrap_or(DEFAULT_D_DOPAMINE);
    let ratio = o.hebbian_ratio.unwrap_or(DEFAULT_HEBBIAN_RATIO);
    let p = PlasticityParams {
        d_dopamine: T::of(d_dopamine),
        d_hebbian: T::of(d_dopamine * ratio),
        w_min: T::of(o.w_min.unwrap_or(spec.minweight)),
        w_max: T::of(o.w_max.unwrap_or(spec.maxweight)),
        hebbian_window: (spec.hebbian_plasticity_chartime_ratio * chartime).ceil() as i64,
        dopamine_window: spec.dopamine_plasticity_time.round() as i64,
        alpha: T::of(
            o.alpha
                .unwrap_or_else(|| config.globals.get(1).copied().unwrap_or(0.0)),
        ),
        n_silent: o.n_silent.unwrap_or(spec.nsilentsynapses),
    };
    p.validate()?;
    Ok(p)
}

/// Builds a network from a validated configuration.
pub fn build_network<T: Scalar>(
    config: &NetworkConfig,
    options: &BuildOptions,
) -> Result<Network<T>> {
    let resized;
    let config = match options.microcolumns {
        Some(m) => {
            resized = resize_microcolumns(config, m)?;
            &resized
        }
        None => config,
    };
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let columns = config.n_copies;

    let mut receptors = Vec::new();
    let mut next = 0;
    for r in &config.receptors {
        let column_scoped = config
            .links
            .iter()
            .any(|l| l.from == r.name && l.policy.is_column_aware());
        let cols = if column_scoped { columns } else { 1 };
        receptors.push(Receptor {
            name: r.name.clone(),
            per_column: r.n,
            columns: cols,
            column_scoped,
            start: next,
        });
        next += r.n * cols;
    }

    let activated: Vec<&str> = config
        .links
        .iter()
        .filter(|l| l.kind == SynapseKind::Gating && l.weight.is_some_and(|w| w > 0.0))
        .map(|l| l.to.as_str())
        .collect();
    let mut sections = Vec::new();
    let mut start = 0;
    for s in &config.sections {
        let initial = if activated.contains(&s.name.as_str()) {
            ActivityTime::ZERO
        } else {
            ActivityTime::INFINITE
        };
        let mut section = Section::new(
            s.name.clone(),
            s.n,
            columns,
            start,
            SectionParams::new(T::of(s.chartime), initial)?,
        );
        if let Some(p) = &s.plasticity {
            section.plasticity = Some(plasticity_params(
                config,
                p,
                s.chartime,
                &options.plasticity,
            )?);
            section.dopamine_enabled = p.three_factor_plasticity;
        }
        section.lateral_gating = config.links.iter().any(|l| {
            l.from == s.name
                && l.to == s.name
                && l.kind == SynapseKind::Gating
                && l.delay.as_ref().is_none_or(|d| d.max == 0.0)
        });
        start += section.len();
        sections.push(section);
    }

    let mut synapses: Vec<Synapse<T>> = Vec::new();
    let mut initial: Vec<Vec<(usize, T)>> = vec![Vec::new(); start];
    for link in &config.links {
        let (src, pre_base, is_input) =
            if let Some(r) = receptors.iter().find(|r| r.name == link.from) {
                let ep = if r.column_scoped {
                    Endpoint::column(r.per_column, r.columns)
                } else {
                    Endpoint::shared(r.per_column)
                };
                (ep, r.start, true)
            } else {
                let s = sections
                    .iter()
                    .find(|s| s.name == link.from)
                    .expect("validated");
                (Endpoint::column(s.per_column, s.columns), s.start, false)
            };
        let target = sections
            .iter()
            .find(|s| s.name == link.to)
            .expect("validated");
        let dst = Endpoint::column(target.per_column, target.columns);
        let post_base = target.start;
        let pairs = expand_link_policy(
            link,
            src,
            dst,
            link.from == link.to,
            &options.expand,
            &mut rng,
        )?;
        for (pre, post) in pairs {
            let source = if is_input {
                Source::Input(pre_base + pre)
            } else {
                Source::Neuron(pre_base + pre)
            };
            let post = post_base + post;
            let delay = link
                .delay
                .as_ref()
                .map_or(0.0, |d| sample(d, &mut rng))
                .round() as u32;
            let syn = match link.kind {
                SynapseKind::Gating => {
                    let w = link.weight.expect("validated");
                    Synapse::new_gating(source, post, GatingWeight::from_config(w)?, delay)
                }
                SynapseKind::Plastic => {
                    let r = options.plasticity.initial_resource.unwrap_or_else(|| {
                        sample(link.ini_resource.as_ref().expect("validated"), &mut rng)
                    });
                    initial[post].push((synapses.len(), T::of(r)));
                    Synapse::new(source, post, SynapseKind::Plastic, T::zero(), delay)
                }
                kind => Synapse::new(
                    source,
                    post,
                    kind,
                    T::of(link.weight.expect("validated")),
                    delay,
                ),
            };
            synapses.push(syn);
        }
    }

    let mut learners = vec![None; start];
    for s in &sections {
        let Some(p) = &s.plasticity else { continue };
        for n in s.range() {
            let mut entries = std::mem::take(&mut initial[n]);
            entries.sort_by_key(|&(id, _)| match synapses[id].pre {
                Source::Input(i) => (0, i),
                Source::Neuron(m) => (1, m),
            });
            let (ids, values): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
            learners[n] = Some(LearningState::new(ids, values, p.n_silent));
        }
    }

    let race = ChaCha8Rng::seed_from_u64(options.seed ^ 0x5851_f42d_4c95_7f2d);
    Ok(Network::assemble(
        sections, receptors, synapses, learners, race,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(policy: LinkPolicy) -> LinkSpec {
        LinkSpec {
            from: "A".into(),
            to: "B".into(),
            policy,
            kind: SynapseKind::Fixed,
            weight: Some(1.0),
            ini_resource: None,
            delay: None,
            probability: None,
            maxnpre: None,
        }
    }

    fn expand(
        l: &LinkSpec,
        s: Endpoint,
        d: Endpoint,
        same: bool,
        o: ExpandOptions,
    ) -> Vec<(usize, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        expand_link_policy(l, s, d, same, &o, &mut rng).unwrap()
    }

    #[test]
    fn aligned_identity_modulo_broadcast() {
        let l = link(LinkPolicy::Aligned);
        let o = ExpandOptions::default();
        let c = Endpoint::column;
        assert_eq!(
            expand(&l, c(4, 1), c(4, 1), false, o),
            vec![(0, 0), (1, 1), (2, 2), (3, 3)]
        );
        assert_eq!(
            expand(&l, c(4, 1), c(1, 1), false, o),
            vec![(0, 0), (1, 0), (2, 0), (3, 0)]
        );
        assert_eq!(
            expand(&l, c(1, 2), c(3, 2), false, o),
            vec![(0, 0), (0, 1), (0, 2), (1, 3), (1, 4), (1, 5)]
        );
    }

    #[test]
    fn aligned_coprime_is_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = expand_link_policy(
            &link(LinkPolicy::Aligned),
            Endpoint::column(3, 1),
            Endpoint::column(2, 1),
            false,
            &ExpandOptions::default(),
            &mut rng,
        );
        assert!(matches!(r, Err(Error::InvalidLink { .. })));
    }

    #[test]
    fn lateral_with_and_without_self() {
        let l = link(LinkPolicy::AllToAllSections);
        let c = Endpoint::column(4, 1);
        let without = ExpandOptions {
            lateral_self: false,
            ..ExpandOptions::default()
        };
        let pairs = expand(&l, c, c, true, without);
        assert_eq!(pairs.len(), 12);
        assert!(pairs.iter().all(|(a, b)| a != b));
        assert_eq!(expand(&l, c, c, true, ExpandOptions::default()).len(), 16);
    }

    #[test]
    fn lateral_column_scope() {
        let l = link(LinkPolicy::AllToAllSections);
        let c = Endpoint::column(2, 3);
        assert_eq!(expand(&l, c, c, true, ExpandOptions::default()).len(), 36);
        let per_column = ExpandOptions {
            cross_column_lateral: false,
            lateral_self: true,
        };
        let pairs = expand(&l, c, c, true, per_column);
        assert_eq!(pairs.len(), 12);
        assert!(pairs.iter().all(|(a, b)| a / 2 == b / 2));
    }

    #[test]
    fn exclusive_skips_own_column() {
        let l = link(LinkPolicy::Exclusive);
        let o = ExpandOptions::default();
        assert!(expand(&l, Endpoint::column(1, 1), Endpoint::column(1, 1), false, o).is_empty());
        let pairs = expand(&l, Endpoint::column(1, 3), Endpoint::column(1, 3), false, o);
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]);
    }

    #[test]
    fn dense_honors_probability_and_cap() {
        let mut l = link(LinkPolicy::Dense);
        let o = ExpandOptions::default();
        let full = expand(&l, Endpoint::shared(133), Endpoint::column(4, 2), false, o);
        assert_eq!(full.len(), 133 * 8);
        l.maxnpre = Some(20);
        let capped = expand(&l, Endpoint::shared(133), Endpoint::column(4, 1), false, o);
        assert_eq!(capped.len(), 80);
        l.maxnpre = None;
        l.probability = Some(0.5);
        let thinned = expand(&l, Endpoint::shared(1000), Endpoint::column(1, 1), false, o);
        assert!((400..600).contains(&thinned.len()));
        l.probability = Some(0.0);
        assert!(expand(&l, Endpoint::shared(10), Endpoint::column(3, 1), false, o).is_empty());
    }
}
