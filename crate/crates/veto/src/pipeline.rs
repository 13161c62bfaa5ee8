//! The experiment pipeline: loads the vocabulary, scorer, resources and
//! sentence records once, then runs one of the four tasks over them.
//!
//! Records decode concurrently; results are aggregated in record-id order,
//! so identical configurations produce byte-identical artifacts. Sweep
//! values run sequentially unless `--parallel-sweep` is set (the flag never
//! changes the output bytes, only the schedule).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use veto_core::constraint::{
    extract_paraphrase_constraints, extract_refinement_constraints, select_constraints,
    stem_constraints, token_scores_from_subwords, ConstraintSet,
};
use veto_core::decode::{decode, DecodeConfig, DecodeOutput, Hypothesis, Method};
use veto_core::metrics::{corpus_bleu, evaluate_corpus, BleuConfig, EvalReport, MetricsError};
use veto_core::score::{
    encode_learned_input, generate_synthetic_training_data, parse_learned_input, Scorer,
};
use veto_core::text::{detokenize, segment, word_tokenize, StemmerConfig};
use veto_core::vocab::{SubwordId, Vocabulary};

use crate::config::{ExperimentConfig, Task};
use crate::formats::{self, FormatError, SentenceRecord};
use crate::report::{
    format_value, render_curve_csv, render_report, RoundReport, SweepRow, TaskReport,
};

/// Errors from running an experiment.
#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("record {id}: cannot segment source: {msg}")]
    Segment { id: String, msg: String },
    #[error("record {id}: decode failed: {msg}")]
    Decode { id: String, msg: String },
    #[error("record {id} has no reference; refinement needs at least one per record")]
    MissingReferences { id: String },
    #[error(
        "records mix present and absent references; give references for all sentences or none"
    )]
    InconsistentReferences,
    #[error("record {id}: constraint selection failed: {msg}")]
    Select { id: String, msg: String },
    #[error("record {id}: invalid constraints: {msg}")]
    Constraint { id: String, msg: String },
    #[error("the sweep needs a method with a control parameter; method \"none\" has neither a penalty nor a threshold")]
    SweepMethodNone,
    #[error("evaluation failed: {0}")]
    Metrics(#[from] MetricsError),
    #[error("failed to write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One constrained-decoding round: its outputs, the constraint set each
/// record was decoded under, and corpus metrics.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub texts: Vec<String>,
    pub constraints: Vec<ConstraintSet>,
    pub eval: EvalReport,
    /// Records whose beam was emptied by filtering and fell back to the
    /// best removed expansion.
    pub fallbacks: usize,
}

#[derive(Debug, Clone)]
pub struct ParaphraseOutcome {
    /// Round 0 is the unconstrained baseline.
    pub rounds: Vec<RoundOutcome>,
}

#[derive(Debug, Clone)]
pub struct RefinementOutcome {
    pub pass1_texts: Vec<String>,
    pub pass2_texts: Vec<String>,
    pub constraints: Vec<ConstraintSet>,
    pub baseline_bleu: f64,
    pub refined_bleu: f64,
    /// Evaluation of pass 2 against the references and pass 1.
    pub eval: EvalReport,
    pub fallbacks: usize,
}

impl RefinementOutcome {
    pub fn bleu_delta(&self) -> f64 {
        self.refined_bleu - self.baseline_bleu
    }
}

#[derive(Debug, Clone)]
pub struct GenOutcome {
    pub lines: Vec<String>,
    pub with_constraints: usize,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Which decoding parameter was varied ("penalty" or "threshold").
    pub control: String,
    /// One row per sweep value, ascending.
    pub rows: Vec<SweepRow>,
}

/// Everything a run produces: the report and the named files to write.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: TaskReport,
    /// `(file name, content)` pairs in write order; the report is last.
    pub files: Vec<(String, String)>,
}

/// A loaded experiment, ready to run.
pub struct Pipeline {
    pub cfg: ExperimentConfig,
    pub vocab: Vocabulary,
    pub scorer: Box<dyn Scorer>,
    /// True when the scorer takes constraints appended to its source
    /// instead of through a decoder-side mechanism.
    pub inband_constraints: bool,
    pub stopwords: BTreeSet<String>,
    pub stemmer: StemmerConfig,
    pub records: Vec<SentenceRecord>,
    src_ids: Vec<Vec<SubwordId>>,
    bleu: BleuConfig,
}

impl Pipeline {
    /// Loads all inputs. Records are sorted by id so every later
    /// aggregation step is deterministic.
    pub fn load(cfg: ExperimentConfig) -> Result<Self, PipelineError> {
        let vocab = formats::load_vocabulary(&cfg.vocab)?;
        let loaded = formats::load_scorer(&cfg.scorer, &vocab)?;
        let stopwords = match &cfg.stopwords {
            Some(p) => formats::load_stopwords(p)?,
            None => formats::default_stopwords(),
        };
        let stemmer = match &cfg.stemmer_rules {
            Some(p) => formats::load_stemmer_rules(p)?,
            None => formats::default_stemmer_rules(),
        };
        let mut records = formats::read_records(&cfg.input)?;
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let src_ids = records
            .iter()
            .map(|r| {
                segment(&r.source, &vocab).map_err(|e| PipelineError::Segment {
                    id: r.id.to_string(),
                    msg: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            cfg,
            vocab,
            scorer: loaded.scorer,
            inband_constraints: loaded.inband_constraints,
            stopwords,
            stemmer,
            records,
            src_ids,
            bleu: BleuConfig::default(),
        })
    }

    /// Runs the configured task and assembles its artifacts.
    pub fn run(&self) -> Result<RunArtifacts, PipelineError> {
        let mut files: Vec<(String, String)> = Vec::new();
        let report = match self.cfg.task {
            Task::Paraphrase => {
                let out = self.run_paraphrase(&self.cfg.decode)?;
                for (i, round) in out.rounds.iter().enumerate() {
                    files.push((format!("round_{i}.txt"), text_file(&round.texts)));
                }
                TaskReport::Paraphrase {
                    rounds: out
                        .rounds
                        .iter()
                        .enumerate()
                        .map(|(i, r)| RoundReport {
                            round: i,
                            eval: r.eval.clone(),
                        })
                        .collect(),
                }
            }
            Task::Refine => {
                let out = self.run_refinement(&self.cfg.decode)?;
                files.push(("pass_1.txt".into(), text_file(&out.pass1_texts)));
                files.push(("pass_2.txt".into(), text_file(&out.pass2_texts)));
                TaskReport::Refine {
                    baseline_bleu: out.baseline_bleu,
                    refined_bleu: out.refined_bleu,
                    bleu_delta: out.bleu_delta(),
                    eval: out.eval,
                }
            }
            Task::GenTrainData => {
                let out = self.run_gen_train_data()?;
                files.push(("train.txt".into(), text_file(&out.lines)));
                TaskReport::GenTrainData {
                    lines: out.lines.len(),
                    with_constraints: out.with_constraints,
                    without_constraints: out.lines.len() - out.with_constraints,
                }
            }
            Task::Sweep => {
                let out = self.run_sweep()?;
                files.push(("curve.csv".into(), render_curve_csv(&out.rows)));
                TaskReport::Sweep {
                    control: out.control,
                    rows: out.rows,
                }
            }
        };
        files.push(("report.json".into(), render_report(&report)));
        Ok(RunArtifacts { report, files })
    }

    /// Iterated paraphrasing. Round 0 decodes unconstrained; each later
    /// round extracts constraints from the previous round's output,
    /// accumulates them (unless disabled) and decodes again. Every round is
    /// evaluated against the references (BLEU), the round-0 baseline
    /// (similarity) and its own constraints (coverage).
    pub fn run_paraphrase(&self, dcfg: &DecodeConfig) -> Result<ParaphraseOutcome, PipelineError> {
        let n = self.records.len();
        let refs = self.references()?;
        let mut cumulative: Vec<ConstraintSet> = vec![ConstraintSet::empty(); n];
        let mut rounds: Vec<RoundOutcome> = Vec::with_capacity(self.cfg.rounds);
        let mut baseline_texts: Vec<String> = Vec::new();
        let mut prev: Option<(Vec<String>, Vec<DecodeOutput>)> = None;

        for round in 0..self.cfg.rounds {
            let css: Vec<ConstraintSet> = if round == 0 {
                vec![ConstraintSet::empty(); n]
            } else {
                let (prev_texts, prev_outs) = prev.as_ref().expect("set after round 0");
                let mut css = Vec::with_capacity(n);
                for i in 0..n {
                    let fresh = self.record_constraints(
                        &self.records[i],
                        &prev_texts[i],
                        None,
                        best_hypothesis(&prev_outs[i]),
                    )?;
                    cumulative[i] = cumulative[i].merged(&fresh);
                    css.push(if self.cfg.no_accumulate {
                        fresh
                    } else {
                        cumulative[i].clone()
                    });
                }
                css
            };
            let outs = self.decode_all(&css, dcfg)?;
            let texts: Vec<String> = outs.iter().map(|o| self.best_text(o)).collect();
            if round == 0 {
                baseline_texts = texts.clone();
            }
            let eval = evaluate_corpus(
                &texts,
                refs.as_deref(),
                Some(&baseline_texts),
                &css,
                &self.stemmer,
                &self.bleu,
            )?;
            let fallbacks = outs.iter().filter(|o| o.fallback_used).count();
            rounds.push(RoundOutcome {
                texts: texts.clone(),
                constraints: css,
                eval,
                fallbacks,
            });
            prev = Some((texts, outs));
        }
        Ok(ParaphraseOutcome { rounds })
    }

    /// Two-pass refinement: an unconstrained first pass, then a second pass
    /// constrained by the first pass's content words that appear in no
    /// reference. Requires every record to carry at least one reference.
    pub fn run_refinement(&self, dcfg: &DecodeConfig) -> Result<RefinementOutcome, PipelineError> {
        for r in &self.records {
            if r.references.is_empty() {
                return Err(PipelineError::MissingReferences {
                    id: r.id.to_string(),
                });
            }
        }
        let n = self.records.len();
        let refs: Vec<Vec<String>> = self.records.iter().map(|r| r.references.clone()).collect();

        let empty = vec![ConstraintSet::empty(); n];
        let pass1 = self.decode_all(&empty, dcfg)?;
        let pass1_texts: Vec<String> = pass1.iter().map(|o| self.best_text(o)).collect();

        let mut css = Vec::with_capacity(n);
        for i in 0..n {
            css.push(self.record_constraints(
                &self.records[i],
                &pass1_texts[i],
                Some(&self.records[i].references),
                best_hypothesis(&pass1[i]),
            )?);
        }

        let pass2 = self.decode_all(&css, dcfg)?;
        let pass2_texts: Vec<String> = pass2.iter().map(|o| self.best_text(o)).collect();

        let baseline_bleu = corpus_bleu(&pass1_texts, &refs, &self.bleu)?;
        let refined_bleu = corpus_bleu(&pass2_texts, &refs, &self.bleu)?;
        let eval = evaluate_corpus(
            &pass2_texts,
            Some(&refs),
            Some(&pass1_texts),
            &css,
            &self.stemmer,
            &self.bleu,
        )?;
        let fallbacks = pass2.iter().filter(|o| o.fallback_used).count();
        Ok(RefinementOutcome {
            pass1_texts,
            pass2_texts,
            constraints: css,
            baseline_bleu,
            refined_bleu,
            eval,
            fallbacks,
        })
    }

    /// Emits one constraint-annotated training line per record. Records with
    /// references get constraints by decode-and-compare; explicit constraint
    /// fields are used verbatim; records providing neither fall back to the
    /// plain source line.
    pub fn run_gen_train_data(&self) -> Result<GenOutcome, PipelineError> {
        let stem_cfg = if self.cfg.stem {
            Some(&self.stemmer)
        } else {
            None
        };
        let mut lines = Vec::with_capacity(self.records.len());
        let mut with_constraints = 0;
        for record in &self.records {
            let line = if let Some(surfaces) = &record.constraints {
                self.explicit_line(record, surfaces)?
            } else if record.references.is_empty() {
                log::warn!(
                    "record {}: no references and no explicit constraints; emitting the plain source",
                    record.id
                );
                record.source.clone()
            } else {
                let pair = (record.source.clone(), record.references.join(" "));
                generate_synthetic_training_data(
                    &[pair],
                    &*self.scorer,
                    &self.cfg.decode,
                    &self.stopwords,
                    stem_cfg,
                    &self.vocab,
                    self.cfg.max_constraints,
                )
                .pop()
                .expect("one line per input pair")
            };
            if !parse_learned_input(&line).1.is_empty() {
                with_constraints += 1;
            }
            lines.push(line);
        }
        Ok(GenOutcome {
            lines,
            with_constraints,
        })
    }

    fn explicit_line(
        &self,
        record: &SentenceRecord,
        surfaces: &[String],
    ) -> Result<String, PipelineError> {
        let mut cs = ConstraintSet::from_surfaces(surfaces.iter(), &self.vocab).map_err(|e| {
            PipelineError::Constraint {
                id: record.id.to_string(),
                msg: e.to_string(),
            }
        })?;
        if self.cfg.stem {
            cs = stem_constraints(&cs, &self.stemmer, &self.vocab);
        }
        if let Some(k) = self.cfg.max_constraints {
            cs = cs.truncated(k);
        }
        veto_core::score::format_learned_input(&record.source, &cs).map_err(|e| {
            PipelineError::Constraint {
                id: record.id.to_string(),
                msg: e.to_string(),
            }
        })
    }

    /// Repeats the sweep task once per control value (ascending) and
    /// tabulates the final-round metrics. A value the decoder rejects
    /// yields an all-missing row instead of aborting the sweep.
    pub fn run_sweep(&self) -> Result<SweepOutcome, PipelineError> {
        let control = match self.cfg.decode.method {
            Method::PenaltySubword | Method::PenaltyWholetoken => "penalty",
            Method::FilterSubword | Method::FilterMultisubword => "threshold",
            Method::None => return Err(PipelineError::SweepMethodNone),
        };
        let mut values = self.cfg.sweep_values.clone();
        values.sort_by(|a, b| a.total_cmp(b));

        let eval_one = |v: f64| -> Option<EvalReport> {
            let mut dcfg = self.cfg.decode.clone();
            match control {
                "penalty" => dcfg.penalty = v,
                _ => dcfg.threshold = v,
            }
            let result = match self.cfg.sweep_task {
                Task::Refine => self.run_refinement(&dcfg).map(|o| o.eval),
                _ => self
                    .run_paraphrase(&dcfg)
                    .map(|o| o.rounds.last().expect("rounds >= 1").eval.clone()),
            };
            match result {
                Ok(eval) => Some(eval),
                Err(err) => {
                    log::warn!("sweep value {v} failed: {err}");
                    None
                }
            }
        };

        let evals: Vec<Option<EvalReport>> = if self.cfg.parallel_sweep {
            values.par_iter().map(|&v| eval_one(v)).collect()
        } else {
            values.iter().map(|&v| eval_one(v)).collect()
        };

        let rows = values
            .iter()
            .zip(evals)
            .map(|(&v, eval)| match eval {
                Some(e) => SweepRow {
                    value: format_value(v),
                    bleu: e.bleu,
                    sim_bleu: e.sim_bleu,
                    coverage_surface: e.coverage_surface,
                    coverage_stem: e.coverage_stem,
                },
                None => SweepRow {
                    value: format_value(v),
                    bleu: None,
                    sim_bleu: None,
                    coverage_surface: None,
                    coverage_stem: None,
                },
            })
            .collect();
        Ok(SweepOutcome {
            control: control.to_string(),
            rows,
        })
    }

    // -- shared plumbing ----------------------------------------------------

    /// All-or-nothing references: `Some` when every record has at least one,
    /// `None` when none do, an error when they are mixed.
    fn references(&self) -> Result<Option<Vec<Vec<String>>>, PipelineError> {
        let with = self
            .records
            .iter()
            .filter(|r| !r.references.is_empty())
            .count();
        if with == 0 {
            Ok(None)
        } else if with == self.records.len() {
            Ok(Some(
                self.records.iter().map(|r| r.references.clone()).collect(),
            ))
        } else {
            Err(PipelineError::InconsistentReferences)
        }
    }

    /// Decodes every record under its constraint set, concurrently, keeping
    /// record order. In-band scorers get the constraints appended to their
    /// source after the separator token.
    fn decode_all(
        &self,
        css: &[ConstraintSet],
        dcfg: &DecodeConfig,
    ) -> Result<Vec<DecodeOutput>, PipelineError> {
        debug_assert_eq!(css.len(), self.records.len());
        self.records
            .par_iter()
            .zip(self.src_ids.par_iter())
            .zip(css.par_iter())
            .map(|((record, src), cs)| {
                let source = if self.inband_constraints {
                    encode_learned_input(src, cs, &self.vocab)
                } else {
                    src.clone()
                };
                decode(&source, &*self.scorer, dcfg, cs, self.vocab.specials().eos).map_err(|e| {
                    PipelineError::Decode {
                        id: record.id.to_string(),
                        msg: e.to_string(),
                    }
                })
            })
            .collect()
    }

    /// The best hypothesis rendered as text, specials stripped.
    fn best_text(&self, out: &DecodeOutput) -> String {
        let ids: Vec<SubwordId> = best_hypothesis(out)
            .tokens
            .iter()
            .copied()
            .filter(|&id| !self.vocab.is_special(id))
            .collect();
        detokenize(&ids, &self.vocab).expect("decoded ids come from this vocabulary")
    }

    /// Per-word scores for constraint selection: each decoded word scores
    /// the minimum log probability of its subwords across occurrences, and
    /// every word-tokenized sub-token inherits the minimum over the words
    /// containing it (so "dog" is scored even when decoded as "dog.").
    fn hypothesis_token_scores(&self, hyp: &Hypothesis) -> BTreeMap<String, f64> {
        let mut scores = token_scores_from_subwords(&hyp.tokens, &hyp.step_logprobs, &self.vocab);
        for (word, s) in scores.clone() {
            for token in word_tokenize(&word) {
                let key = token.to_lowercase();
                let entry = scores.entry(key).or_insert(f64::INFINITY);
                if s < *entry {
                    *entry = s;
                }
            }
        }
        scores
    }

    /// The constraint set for one record: the explicit field verbatim if
    /// present, otherwise extraction from the baseline text followed by
    /// score-based selection; stemmed when configured.
    fn record_constraints(
        &self,
        record: &SentenceRecord,
        baseline_text: &str,
        references: Option<&[String]>,
        hyp: &Hypothesis,
    ) -> Result<ConstraintSet, PipelineError> {
        let mut cs = if let Some(surfaces) = &record.constraints {
            ConstraintSet::from_surfaces(surfaces.iter(), &self.vocab).map_err(|e| {
                PipelineError::Constraint {
                    id: record.id.to_string(),
                    msg: e.to_string(),
                }
            })?
        } else {
            let candidates = match references {
                Some(refs) => extract_refinement_constraints(
                    baseline_text,
                    refs,
                    &self.stopwords,
                    &self.vocab,
                ),
                None => extract_paraphrase_constraints(baseline_text, &self.stopwords, &self.vocab),
            };
            let scores = self.hypothesis_token_scores(hyp);
            select_constraints(&candidates, &scores, &self.cfg.selection).map_err(|e| {
                PipelineError::Select {
                    id: record.id.to_string(),
                    msg: e.to_string(),
                }
            })?
        };
        if self.cfg.stem {
            cs = stem_constraints(&cs, &self.stemmer, &self.vocab);
        }
        Ok(cs)
    }
}

fn best_hypothesis(out: &DecodeOutput) -> &Hypothesis {
    out.hypotheses
        .first()
        .expect("decode always returns at least one hypothesis")
}

fn text_file(lines: &[String]) -> String {
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

/// Writes all artifact files under `out_dir`, creating it if needed, and
/// returns the written paths in file order.
pub fn write_artifacts(out_dir: &Path, arts: &RunArtifacts) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(out_dir).map_err(|source| PipelineError::Write {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::with_capacity(arts.files.len());
    for (name, content) in &arts.files {
        let path = out_dir.join(name);
        fs::write(&path, content).map_err(|source| PipelineError::Write {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}
