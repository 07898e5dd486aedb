//! Time until a release is superseded by the next release of its package.

use serde::{Deserialize, Serialize};

use crate::ingest::Dataset;
use crate::snapshot::Timeline;
use crate::stats::{Observation, SurvivalSample};
use crate::time::{days_between, Timestamp};

/// Release lifetimes, pooled or split by whether the package had direct
/// dependents when the release was published.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SurvivalGroups {
    Pooled(SurvivalSample),
    Split {
        required: SurvivalSample,
        not_required: SurvivalSample,
    },
}

impl SurvivalGroups {
    pub fn samples(&self) -> Vec<&SurvivalSample> {
        match self {
            SurvivalGroups::Pooled(s) => vec![s],
            SurvivalGroups::Split {
                required,
                not_required,
            } => vec![not_required, required],
        }
    }
}

pub fn survival_dataset(d: &Dataset, split_by_required: bool) -> SurvivalGroups {
    survival_on(&Timeline::new(d), d.cutoff(), split_by_required)
}

/// One observation per release: the days until the package's next release,
/// or, for its last release, the days until `cutoff` (censored).
pub fn survival_on(tl: &Timeline, cutoff: Timestamp, split_by_required: bool) -> SurvivalGroups {
    let mut observations = Vec::new();
    for id in 0..tl.package_count() {
        let rel = tl.releases_of(id);
        for (i, r) in rel.iter().enumerate() {
            let o = match rel.get(i + 1) {
                Some(next) => Observation::event(days_between(&r.timestamp, &next.timestamp)),
                None => Observation::censored(days_between(&r.timestamp, &cutoff)),
            };
            observations.push((id, i, o));
        }
    }
    if !split_by_required {
        let obs = observations.into_iter().map(|(_, _, o)| o).collect();
        return SurvivalGroups::Pooled(SurvivalSample::new("all", obs));
    }

    let required = required_at_release(tl);
    let (mut yes, mut no) = (Vec::new(), Vec::new());
    for (id, i, o) in observations {
        if required[id][i] {
            yes.push(o);
        } else {
            no.push(o);
        }
    }
    SurvivalGroups::Split {
        required: SurvivalSample::new("required", yes),
        not_required: SurvivalSample::new("not_required", no),
    }
}

/// For every release, whether its package had a direct dependent in the
/// snapshot at the release's timestamp.
///
/// Replays all releases in time order while maintaining, per package, how
/// many packages' current latest releases depend on it. All releases sharing
/// a timestamp are applied before any of them is assessed.
fn required_at_release(tl: &Timeline) -> Vec<Vec<bool>> {
    let n = tl.package_count();
    let mut events: Vec<(Timestamp, u32, u32)> = Vec::new();
    for id in 0..n {
        for (i, r) in tl.releases_of(id).iter().enumerate() {
            events.push((r.timestamp, id as u32, i as u32));
        }
    }
    events.sort_unstable();

    let mut result: Vec<Vec<bool>> = (0..n).map(|id| vec![false; tl.releases_of(id).len()]).collect();
    let mut dependents = vec![0u32; n];
    let mut current: Vec<Option<u32>> = vec![None; n];
    let mut start = 0;
    while start < events.len() {
        let t = events[start].0;
        let end = start + events[start..].partition_point(|e| e.0 == t);
        for &(_, id, i) in &events[start..end] {
            let id = id as usize;
            if let Some(old) = current[id] {
                for &q in tl.releases_of(id)[old as usize].targets.iter() {
                    dependents[q as usize] -= 1;
                }
            }
            for &q in tl.releases_of(id)[i as usize].targets.iter() {
                dependents[q as usize] += 1;
            }
            current[id] = Some(i);
        }
        for &(_, id, i) in &events[start..end] {
            result[id as usize][i as usize] = dependents[id as usize] > 0;
        }
        start = end;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{generate, tiny, GeneratorConfig};
    use crate::snapshot::build_snapshot;

    fn durations(s: &SurvivalSample, censored: bool) -> Vec<f64> {
        let mut v: Vec<f64> = s
            .observations
            .iter()
            .filter(|o| o.censored == censored)
            .map(|o| o.duration)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn pooled_on_tiny() {
        let SurvivalGroups::Pooled(s) = survival_dataset(&tiny(), false) else {
            panic!("expected a pooled sample");
        };
        assert_eq!(s.len(), 7);
        assert_eq!(durations(&s, false), [31.0, 36.0]);
        assert_eq!(durations(&s, true), [22.0, 27.0, 46.0, 72.0, 87.0]);
    }

    #[test]
    fn split_on_tiny() {
        let SurvivalGroups::Split {
            required,
            not_required,
        } = survival_dataset(&tiny(), true)
        else {
            panic!("expected a split sample");
        };
        assert_eq!(required.len() + not_required.len(), 7);
        // a@1.0.0 (36 days) had no dependent on 2020-01-10.
        assert!(not_required.observations.contains(&Observation::event(36.0)));
        // c@2.0.0 (27 days, censored): d only arrives on 2020-03-10.
        assert!(not_required.observations.contains(&Observation::censored(27.0)));
        // a@1.1.0 on 2020-02-15: c@1.0.0 depends on a since 2020-02-03.
        assert!(required.observations.contains(&Observation::censored(46.0)));
    }

    fn required_by_snapshots(d: &Dataset) -> Vec<Vec<bool>> {
        let tl = Timeline::new(d);
        (0..tl.package_count())
            .map(|id| {
                let name = tl.name(id).to_owned();
                tl.release_times(id)
                    .map(|t| {
                        let g = build_snapshot(d, t);
                        g.in_degree(g.node_id(&name).unwrap()) > 0
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn sweep_matches_snapshots() {
        assert_eq!(required_at_release(&Timeline::new(&tiny())), required_by_snapshots(&tiny()));
        for seed in 0..5 {
            let d = generate(&GeneratorConfig {
                n_packages: 40,
                months: 6,
                seed,
                mean_deps: 2.0,
                update_rate: 0.8,
                ..GeneratorConfig::default()
            })
            .unwrap();
            assert_eq!(required_at_release(&Timeline::new(&d)), required_by_snapshots(&d), "seed {seed}");
        }
    }

    #[test]
    fn one_censored_observation_per_package() {
        let d = generate(&GeneratorConfig {
            n_packages: 30,
            months: 4,
            seed: 3,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let SurvivalGroups::Pooled(s) = survival_dataset(&d, false) else {
            unreachable!()
        };
        assert_eq!(s.len(), d.releases().len());
        assert_eq!(s.len() - s.events(), d.packages().len());
    }
}
