use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::metrics::{pairwise_distances, Summary};
use super::report::{CampaignReport, EtiMs, MutantRow, SkippedSeed, StageMs, SummaryStats};
use super::target::execute_target;
use super::{io_err, CampaignConfig, LabelMode, Result, TargetSpec};
use crate::convert::FormatDescriptor;
use crate::dsl::{self, ConstraintSpec, ViolationReport};
use crate::graph::Graph;
use crate::mutate::{mutate_n, seeded_rng, MutationRecord, NeighborPolicy, OpWeights};
use crate::refine::{refine, RefineConfig, RefineOutcome, RefineStatus};

/// Stream offset separating diversity sampling from mutation streams.
const MD_STREAM: u64 = 1 << 32;

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// A validated campaign, ready to run.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub config: CampaignConfig,
    spec: ConstraintSpec,
    format: FormatDescriptor,
    target: TargetSpec,
    weights: OpWeights,
    policy: NeighborPolicy,
    refine: RefineConfig,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    id: &'a str,
    seed: &'a str,
    mutations: &'a [MutationRecord],
    violations_before: &'a ViolationReport,
    refine: Option<&'a RefineOutcome>,
}

#[derive(Default)]
struct SeedResult {
    rows: Vec<MutantRow>,
    skipped: Option<SkippedSeed>,
    original_label: Option<String>,
    distances: Vec<f64>,
    mutation_failures: usize,
    before: BTreeMap<String, usize>,
    after: BTreeMap<String, usize>,
}

fn count_kinds(spec: &ConstraintSpec, report: &ViolationReport, into: &mut BTreeMap<String, usize>) {
    for v in &report.entries {
        *into.entry(dsl::violation_kind(spec, v)).or_default() += 1;
    }
}

impl Campaign {
    pub fn new(config: CampaignConfig) -> Result<Self> {
        config.validate()?;
        Ok(Campaign {
            spec: config.load_spec()?,
            format: config.format_descriptor(),
            target: config.target_spec(),
            weights: config.op_weights()?,
            policy: config.neighbor_policy(),
            refine: config.refine_config(),
            config,
        })
    }

    pub fn spec(&self) -> &ConstraintSpec {
        &self.spec
    }

    fn inputs_dir(&self) -> PathBuf {
        self.config.out_dir.join("inputs")
    }

    /// Runs every seed and assembles the report. Artifacts land under
    /// `out_dir/inputs`; the report itself is not written.
    pub fn run(&self) -> Result<CampaignReport> {
        let dir = self.inputs_dir();
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let seeds = &self.config.seeds;
        let next = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel();
        let workers = self.config.workers.min(seeds.len());
        let mut results: Vec<(usize, Result<SeedResult>)> = thread::scope(|s| {
            for _ in 0..workers {
                let tx = tx.clone();
                let next = &next;
                s.spawn(move || loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= seeds.len() {
                        break;
                    }
                    if tx.send((i, self.run_seed(i, &seeds[i]))).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            rx.into_iter().collect()
        });
        results.sort_by_key(|r| r.0);
        let mut per_seed = Vec::with_capacity(results.len());
        for (_, r) in results {
            per_seed.push(r?);
        }
        Ok(self.assemble(per_seed))
    }

    fn run_seed(&self, index: usize, path: &Path) -> Result<SeedResult> {
        let seed_name = path.display().to_string();
        let mut out = SeedResult::default();
        let skip = |reason: String| {
            log::warn!("skipping seed {seed_name}: {reason}");
            SeedResult { skipped: Some(SkippedSeed { seed: seed_name.clone(), reason }), ..Default::default() }
        };
        let bytes = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) => return Ok(skip(e.to_string())),
        };
        if let Err(e) = self.format.read(&bytes) {
            return Ok(skip(e.to_string()));
        }
        if self.target.label_mode == LabelMode::StdoutLabel {
            out.original_label = execute_target(&self.target, path)?.label;
        }

        let cfg = &self.config;
        let ext = self.format.kind.extension();
        let mut rng = seeded_rng(cfg.rng_seed, index as u64);
        let limit = Duration::from_secs_f64(cfg.time_limit_s);
        let start = Instant::now();
        let mut valid_graphs: Vec<Graph> = Vec::new();
        let mut n = 0usize;
        while cfg.mutants_per_seed.is_none_or(|cap| n < cap) && start.elapsed() < limit {
            let id = format!("s{index:03}-m{n:05}");
            n += 1;
            let t_all = Instant::now();
            let mut ms = StageMs::default();

            let t = Instant::now();
            let g = self.format.read(&bytes)?;
            ms.construct = ms_since(t);

            let t = Instant::now();
            let (mutant, records) = match mutate_n(&g, cfg.budget_per_input, &self.weights, &self.policy, &mut rng) {
                Ok(x) => x,
                Err(e) if matches!(e, crate::mutate::MutationError::RetriesExhausted { .. }) => {
                    log::warn!("{id}: {e}");
                    out.mutation_failures += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            ms.mutate = ms_since(t);

            let t = Instant::now();
            let before = dsl::verify(&self.spec, &mutant, cfg.epsilon)?;
            let (final_graph, outcome) = if cfg.no_refine {
                (mutant, None)
            } else {
                let (g, o) = refine(&mutant, &self.spec, &self.refine)?;
                (g, Some(o))
            };
            ms.refine = ms_since(t);
            let after_len = outcome.as_ref().map_or(before.len(), |o| o.final_report.len());
            count_kinds(&self.spec, &before, &mut out.before);
            if let Some(o) = &outcome {
                count_kinds(&self.spec, &o.final_report, &mut out.after);
            } else {
                count_kinds(&self.spec, &before, &mut out.after);
            }

            let t = Instant::now();
            let data = self.format.write(&final_graph)?;
            let hash = hex::encode(Sha256::digest(&data));
            let stem = &hash[..16];
            let file = format!("{stem}.{ext}");
            let input_path = self.inputs_dir().join(&file);
            std::fs::write(&input_path, &data).map_err(io_err(&input_path))?;
            let sidecar = Sidecar {
                id: &id,
                seed: &seed_name,
                mutations: &records,
                violations_before: &before,
                refine: outcome.as_ref(),
            };
            let side_path = self.inputs_dir().join(format!("{stem}.json"));
            std::fs::write(&side_path, serde_json::to_vec_pretty(&sidecar)?).map_err(io_err(&side_path))?;
            ms.serialize = ms_since(t);

            let discarded = outcome.as_ref().is_some_and(|o| o.status == RefineStatus::Discarded);
            let (executed, accepted, label, reason) = if discarded {
                (false, false, None, Some("refine_discarded".to_string()))
            } else {
                let t = Instant::now();
                let run = execute_target(&self.target, &input_path)?;
                ms.execute = ms_since(t);
                if !run.stderr.is_empty() {
                    let err_path = self.inputs_dir().join(format!("{stem}.stderr"));
                    std::fs::write(&err_path, &run.stderr).map_err(io_err(&err_path))?;
                }
                (true, run.accepted, run.label, run.reason.map(|r| r.to_string()))
            };
            ms.total = ms_since(t_all);

            if accepted {
                valid_graphs.push(final_graph);
            }
            out.rows.push(MutantRow {
                id,
                seed: seed_name.clone(),
                file,
                ops: records.iter().map(|r| r.op.to_string()).collect(),
                refine_status: outcome.as_ref().map_or("skipped", |o| o.status.as_str()).to_string(),
                violations_before: before.len(),
                violations_after: after_len,
                executed,
                accepted,
                label,
                reject_reason: reason,
                ms,
            });
        }
        if valid_graphs.len() >= 2 {
            let mut md_rng = seeded_rng(cfg.rng_seed, MD_STREAM + index as u64);
            out.distances = pairwise_distances(&valid_graphs, &mut md_rng)?;
        }
        Ok(out)
    }

    fn assemble(&self, seeds: Vec<SeedResult>) -> CampaignReport {
        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        let mut distances = Vec::new();
        let mut before = BTreeMap::new();
        let mut after = BTreeMap::new();
        let (mut labeled, mut matching, mut mutation_failures) = (0usize, 0usize, 0usize);
        for s in seeds {
            if let Some(original) = &s.original_label {
                let labels: Vec<String> = s.rows.iter().filter(|r| r.accepted).filter_map(|r| r.label.clone()).collect();
                if let Some(score) = super::semantic_preservation(original, &labels) {
                    matching += (score * labels.len() as f64).round() as usize;
                    labeled += labels.len();
                }
            }
            for (k, v) in s.before {
                *before.entry(k).or_insert(0) += v;
            }
            for (k, v) in s.after {
                *after.entry(k).or_insert(0) += v;
            }
            mutation_failures += s.mutation_failures;
            skipped.extend(s.skipped);
            distances.extend(s.distances);
            rows.extend(s.rows);
        }
        let generated = rows.len();
        let valid = rows.iter().filter(|r| r.accepted).count();
        let invalid_discarded = rows.iter().filter(|r| !r.executed).count();
        let mut refine_outcomes = BTreeMap::new();
        for r in &rows {
            *refine_outcomes.entry(r.refine_status.clone()).or_insert(0) += 1;
        }
        let mean = |f: &dyn Fn(&StageMs) -> f64| {
            if generated == 0 {
                0.0
            } else {
                rows.iter().map(|r| f(&r.ms)).sum::<f64>() / generated as f64
            }
        };
        let eti_ms = EtiMs {
            graph_construction: mean(&|m| m.construct),
            neighbor_selection_and_mutation: mean(&|m| m.mutate),
            constraint_refinement: mean(&|m| m.refine),
            target_execution: mean(&|m| m.execute),
            serialization: mean(&|m| m.serialize),
            total: mean(&|m| m.total),
            pipeline_without_execution: mean(&|m| m.total - m.execute),
        };
        let summary = SummaryStats {
            generated,
            valid,
            invalid_discarded,
            invalid_rejected: generated - valid - invalid_discarded,
            mutation_failures,
            vir: (generated > 0).then(|| valid as f64 / generated as f64),
            sps: (labeled > 0).then(|| matching as f64 / labeled as f64),
            sps_excluded: rows.iter().filter(|r| r.executed && !r.accepted && r.violations_after == 0).count(),
            md: Summary::of(&distances),
            eti_ms,
            refine_outcomes,
            violations_by_kind: before,
            residual_violations_by_kind: after,
            skipped_seeds: skipped,
        };
        CampaignReport { config_echo: self.config.clone(), per_mutant: rows, summary }
    }
}

/// Validates `config`, runs it and returns the report.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignReport> {
    Campaign::new(config.clone())?.run()
}
