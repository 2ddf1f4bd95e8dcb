//! The search loop: entities seed branches, branches grow depth-first with
//! step-feasibility ranking, answers are verified before acceptance, and
//! rejected answers become error records that condition all later generation.

use crate::config::SearchConfig;
use crate::environments::{EnvError, Environment};
use crate::evaluators::{rank_frontier, AnswerJudge, StepJudge};
use crate::extractor::EntitySource;
use crate::gateway::{CallMeter, GatewayError, MeterError};
use crate::generator::{CandidateSource, GenerationError};
use crate::prompts::SiblingEntry;
use crate::trace::{BacktrackReason, GeneratedChild, TraceBody, TraceEvent, TraceSink};
use crate::types::{
    Action, Entity, ErrorRecord, InvariantViolation, Node, Question, SearchOutcome,
    SearchStats, SearchStatus, Trajectory,
};
use std::collections::{BTreeMap, VecDeque};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Per-depth queues of nodes awaiting exploration within one branch.
/// Depth-first order falls out of one rule: always take the head of the
/// deepest non-empty frontier.
#[derive(Debug)]
pub struct FrontierStack<T> {
    frontiers: Vec<VecDeque<T>>,
}

impl<T> Default for FrontierStack<T> {
    fn default() -> Self {
        FrontierStack {
            frontiers: Vec::new(),
        }
    }
}

impl<T> FrontierStack<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Installs the frontier for a depth level. By the DFS pop rule, all
    /// frontiers at this depth or deeper are necessarily empty by the time a
    /// shallower node gets expanded, so installation never discards nodes.
    pub fn push_frontier(&mut self, depth: usize, items: Vec<T>) {
        while self.frontiers.len() <= depth {
            self.frontiers.push(VecDeque::new());
        }
        debug_assert!(
            self.frontiers[depth..].iter().all(|f| f.is_empty()),
            "pushing a frontier over unexplored deeper nodes breaks DFS order"
        );
        self.frontiers[depth] = items.into();
    }

    /// Removes and returns the head of the deepest non-empty frontier.
    pub fn next_node(&mut self) -> Option<T> {
        for frontier in self.frontiers.iter_mut().rev() {
            if let Some(item) = frontier.pop_front() {
                return Some(item);
            }
        }
        None
    }

    pub fn is_empty(&self) -> bool {
        self.frontiers.iter().all(|f| f.is_empty())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    // The cause is embedded in the message rather than exposed as `source()`,
    // so chain-style printers do not repeat it.
    #[error("environment failure at node {node}: {cause}")]
    Environment { node: u64, cause: EnvError },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Invariant(#[from] InvariantViolation),
}

/// Interrupts that abort branch processing: budget exhaustion resolves into a
/// normal budget_exceeded outcome, everything else is a hard error.
enum Interrupt {
    Budget,
    Hard(SolveError),
}

impl From<MeterError> for Interrupt {
    fn from(e: MeterError) -> Self {
        match e {
            MeterError::BudgetExhausted { .. } => Interrupt::Budget,
            MeterError::Gateway(g) => Interrupt::Hard(SolveError::Gateway(g)),
        }
    }
}

enum BranchVerdict {
    /// The id of the accepted Finish node.
    Solved(u64),
    Exhausted,
}

/// Drives one search over a question. The environment and the four search
/// components are supplied by the caller, which is how live, scripted, and
/// oracle-exact configurations all share this one loop.
pub struct Explorer<'a, E: Environment> {
    env: &'a E,
    entities: &'a dyn EntitySource,
    candidates: &'a dyn CandidateSource,
    steps: &'a dyn StepJudge,
    answers: &'a dyn AnswerJudge,
    config: SearchConfig,
    zero_timestamps: bool,
}

struct Run<E: Environment> {
    meter: CallMeter,
    nodes: BTreeMap<u64, Node>,
    sessions: BTreeMap<u64, E::Session>,
    errors: Vec<ErrorRecord>,
    next_id: u64,
    tool_calls: u64,
    /// Set when any path hit max_depth; turns `exhausted` into
    /// `depth_exhausted` for unsolved runs.
    depth_capped: bool,
    seq: u64,
    started: Instant,
}

impl<'a, E: Environment> Explorer<'a, E> {
    pub fn new(
        env: &'a E,
        entities: &'a dyn EntitySource,
        candidates: &'a dyn CandidateSource,
        steps: &'a dyn StepJudge,
        answers: &'a dyn AnswerJudge,
        config: SearchConfig,
    ) -> Self {
        Explorer {
            env,
            entities,
            candidates,
            steps,
            answers,
            config,
            zero_timestamps: false,
        }
    }

    /// Zeroes every event timestamp and the wall-time stat. Used for cassette
    /// replay, where traces must be byte-identical across runs.
    pub fn with_zero_timestamps(mut self, zero: bool) -> Self {
        self.zero_timestamps = zero;
        self
    }

    fn now_ms(&self) -> u64 {
        if self.zero_timestamps {
            return 0;
        }
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }

    fn emit(&self, run: &mut Run<E>, sink: &mut dyn TraceSink, body: TraceBody) {
        let event = TraceEvent {
            seq: run.seq,
            body,
            timestamp_ms: self.now_ms(),
        };
        run.seq += 1;
        sink.emit(&event);
    }

    fn stats(&self, run: &Run<E>) -> SearchStats {
        SearchStats {
            llm_calls: run.meter.llm_calls,
            prompt_tokens: run.meter.prompt_tokens,
            completion_tokens: run.meter.completion_tokens,
            tool_calls: run.tool_calls,
            wall_time_ms: if self.zero_timestamps {
                0
            } else {
                run.started.elapsed().as_millis() as u64
            },
        }
    }

    /// Path from the branch seed down to `id`, inclusive.
    fn chain(run: &Run<E>, id: u64) -> Vec<Node> {
        let mut out = Vec::new();
        let mut cursor = Some(id);
        while let Some(i) = cursor {
            let node = run.nodes[&i].clone();
            cursor = node.parent;
            out.push(node);
        }
        out.reverse();
        out
    }

    pub fn solve(
        &self,
        question: &Question,
        sink: &mut dyn TraceSink,
    ) -> Result<SearchOutcome, SolveError> {
        self.config.clone().validate()?;
        question.validate()?;

        let mut run = Run::<E> {
            meter: CallMeter::new(self.config.llm_call_budget),
            nodes: BTreeMap::new(),
            sessions: BTreeMap::new(),
            errors: Vec::new(),
            next_id: 0,
            tool_calls: 0,
            depth_capped: false,
            seq: 0,
            started: Instant::now(),
        };

        let entities = if self.config.extractor_enabled {
            match self.entities.entities(question, &mut run.meter) {
                Ok(out) => {
                    self.emit(
                        &mut run,
                        sink,
                        TraceBody::Extract {
                            question_id: question.id.clone(),
                            entities: out.entities.iter().map(|e| e.name.clone()).collect(),
                            fallback: out.fallback,
                        },
                    );
                    out.entities
                }
                Err(e) => match Interrupt::from(e) {
                    Interrupt::Budget => return Ok(self.finish_budget(&mut run, sink)),
                    Interrupt::Hard(e) => return Err(e),
                },
            }
        } else {
            // Ablation mode: one branch seeded by the whole question.
            let single = vec![Entity::new(question.text.clone())];
            self.emit(
                &mut run,
                sink,
                TraceBody::Extract {
                    question_id: question.id.clone(),
                    entities: vec![question.text.clone()],
                    fallback: false,
                },
            );
            single
        };

        for (branch, entity) in entities.iter().enumerate() {
            match self.solve_branch(&mut run, sink, question, branch, entity) {
                Ok(BranchVerdict::Solved(finish_id)) => {
                    let trajectory = Trajectory::new(Self::chain(&run, finish_id));
                    let answer = trajectory
                        .tail()
                        .map(|n| n.action.payload().to_string())
                        .unwrap_or_default();
                    let stats = self.stats(&run);
                    self.emit(
                        &mut run,
                        sink,
                        TraceBody::Final {
                            status: SearchStatus::Solved,
                            answer: Some(answer.clone()),
                            stats: stats.clone(),
                        },
                    );
                    let outcome = SearchOutcome {
                        status: SearchStatus::Solved,
                        answer: Some(answer),
                        accepted_trajectory: Some(trajectory),
                        errors: run.errors,
                        stats,
                    };
                    debug_assert!(outcome.validate().is_ok());
                    return Ok(outcome);
                }
                Ok(BranchVerdict::Exhausted) => continue,
                Err(Interrupt::Budget) => return Ok(self.finish_budget(&mut run, sink)),
                Err(Interrupt::Hard(e)) => return Err(e),
            }
        }

        let status = if run.depth_capped {
            SearchStatus::DepthExhausted
        } else {
            SearchStatus::Exhausted
        };
        let stats = self.stats(&run);
        self.emit(
            &mut run,
            sink,
            TraceBody::Final {
                status,
                answer: None,
                stats: stats.clone(),
            },
        );
        Ok(SearchOutcome {
            status,
            answer: None,
            accepted_trajectory: None,
            errors: run.errors,
            stats,
        })
    }

    fn finish_budget(&self, run: &mut Run<E>, sink: &mut dyn TraceSink) -> SearchOutcome {
        let stats = self.stats(run);
        self.emit(
            run,
            sink,
            TraceBody::Final {
                status: SearchStatus::BudgetExceeded,
                answer: None,
                stats: stats.clone(),
            },
        );
        SearchOutcome {
            status: SearchStatus::BudgetExceeded,
            answer: None,
            accepted_trajectory: None,
            errors: std::mem::take(&mut run.errors),
            stats,
        }
    }

    fn execute(
        &self,
        run: &mut Run<E>,
        sink: &mut dyn TraceSink,
        node_id: u64,
        mut session: E::Session,
    ) -> Result<E::Session, Interrupt> {
        let action = run.nodes[&node_id].action.clone();
        let observation = self
            .env
            .step(&mut session, &action)
            .map_err(|cause| {
                Interrupt::Hard(SolveError::Environment {
                    node: node_id,
                    cause,
                })
            })?;
        run.tool_calls += 1;
        run.nodes.get_mut(&node_id).unwrap().observation = Some(observation.clone());
        self.emit(
            run,
            sink,
            TraceBody::ToolExec {
                node: node_id,
                action,
                observation,
            },
        );
        Ok(session)
    }

    fn solve_branch(
        &self,
        run: &mut Run<E>,
        sink: &mut dyn TraceSink,
        question: &Question,
        branch: usize,
        entity: &Entity,
    ) -> Result<BranchVerdict, Interrupt> {
        // Each branch may spend at most max_depth * k expansions, which keeps
        // total work linear in branches x depth x k even though the tree
        // itself could hold k^depth nodes.
        let allowance = self.config.max_depth.saturating_mul(self.config.k);
        let mut expansions: usize = 0;

        let seed_id = run.next_id;
        run.next_id += 1;
        let seed = Node {
            id: seed_id,
            branch,
            depth: 0,
            parent: None,
            thought: format!("Start from entity {}", entity.name),
            action: Action::Search(entity.name.clone()),
            observation: None,
            verdict: None,
        };
        self.emit(
            run,
            sink,
            TraceBody::Generate {
                branch,
                parent: None,
                children: vec![GeneratedChild {
                    id: seed_id,
                    depth: 0,
                    thought: seed.thought.clone(),
                    action: seed.action.clone(),
                }],
                duplicates_discarded: 0,
                failed_slots: 0,
            },
        );
        run.nodes.insert(seed_id, seed);
        let session = self.execute(run, sink, seed_id, self.env.new_session())?;
        run.sessions.insert(seed_id, session);

        let mut stack: FrontierStack<u64> = FrontierStack::new();
        stack.push_frontier(0, vec![seed_id]);

        while let Some(node_id) = stack.next_node() {
            let node = run.nodes[&node_id].clone();

            if let Action::Finish(answer) = &node.action {
                let trajectory = Self::chain(run, node_id);
                let verdict = if self.config.answer_eval_enabled {
                    self.answers
                        .evaluate_answer(question, answer, &trajectory, &mut run.meter)
                        .map_err(Interrupt::from)?
                } else {
                    // Ablation mode: the first Finish wins unconditionally.
                    crate::types::AnswerVerdict {
                        on_topic: true,
                        rationale: "disabled".to_string(),
                    }
                };
                self.emit(
                    run,
                    sink,
                    TraceBody::AnswerEval {
                        node: node_id,
                        answer: answer.clone(),
                        on_topic: verdict.on_topic,
                        rationale: verdict.rationale.clone(),
                    },
                );
                if verdict.on_topic {
                    return Ok(BranchVerdict::Solved(node_id));
                }
                let record = ErrorRecord {
                    branch,
                    rejected_answer: answer.clone(),
                    rationale: verdict.rationale,
                    trajectory_digest: Trajectory::new(trajectory).digest(),
                };
                run.errors.push(record.clone());
                self.emit(run, sink, TraceBody::ErrorRecord { record });
                self.emit(
                    run,
                    sink,
                    TraceBody::Backtrack {
                        from_node: node_id,
                        reason: BacktrackReason::AnswerRejected,
                    },
                );
                continue;
            }

            if node.depth >= self.config.max_depth {
                run.depth_capped = true;
                self.emit(
                    run,
                    sink,
                    TraceBody::Backtrack {
                        from_node: node_id,
                        reason: BacktrackReason::DepthLimit,
                    },
                );
                continue;
            }
            if expansions >= allowance {
                self.emit(
                    run,
                    sink,
                    TraceBody::Backtrack {
                        from_node: node_id,
                        reason: BacktrackReason::ExpansionCap,
                    },
                );
                continue;
            }
            expansions += 1;

            let prefix = Self::chain(run, node_id);
            let initial_siblings: Vec<SiblingEntry> = if self.config.cross_branch_sibling_feedback
            {
                run.nodes
                    .values()
                    .filter(|n| n.depth == node.depth + 1)
                    .map(|n| SiblingEntry {
                        thought: n.thought.clone(),
                        action: n.action.to_string(),
                        observation: n.observation.clone(),
                    })
                    .collect()
            } else {
                Vec::new()
            };

            let batch = match self.candidates.generate(
                question,
                &run.errors,
                &prefix,
                &initial_siblings,
                u32::try_from(self.config.k).unwrap_or(u32::MAX),
                &mut run.meter,
            ) {
                Ok(batch) => batch,
                Err(GenerationError::AllCandidatesFailed {
                    failed_slots,
                    duplicates_discarded,
                }) => {
                    self.emit(
                        run,
                        sink,
                        TraceBody::Generate {
                            branch,
                            parent: Some(node_id),
                            children: Vec::new(),
                            duplicates_discarded,
                            failed_slots,
                        },
                    );
                    self.emit(
                        run,
                        sink,
                        TraceBody::Backtrack {
                            from_node: node_id,
                            reason: BacktrackReason::DeadEnd,
                        },
                    );
                    continue;
                }
                Err(GenerationError::Meter(e)) => return Err(Interrupt::from(e)),
            };

            let mut child_ids = Vec::with_capacity(batch.drafts.len());
            let mut children_meta = Vec::with_capacity(batch.drafts.len());
            for draft in batch.drafts {
                let id = run.next_id;
                run.next_id += 1;
                let child = Node {
                    id,
                    branch,
                    depth: node.depth + 1,
                    parent: Some(node_id),
                    thought: draft.thought,
                    action: draft.action,
                    observation: None,
                    verdict: None,
                };
                children_meta.push(GeneratedChild {
                    id,
                    depth: child.depth,
                    thought: child.thought.clone(),
                    action: child.action.clone(),
                });
                run.nodes.insert(id, child);
                child_ids.push(id);
            }
            self.emit(
                run,
                sink,
                TraceBody::Generate {
                    branch,
                    parent: Some(node_id),
                    children: children_meta,
                    duplicates_discarded: batch.duplicates_discarded,
                    failed_slots: batch.failed_slots,
                },
            );

            // Execution pass: every non-Finish child runs against a snapshot
            // of the parent's session so sibling observations cannot leak
            // cursor state into each other.
            for &child_id in &child_ids {
                if run.nodes[&child_id].action.is_finish() {
                    continue;
                }
                let parent_session = run.sessions[&node_id].clone();
                let session = self.execute(run, sink, child_id, parent_session)?;
                run.sessions.insert(child_id, session);
            }

            // Evaluation pass, then ranking. With the evaluator disabled the
            // frontier keeps generation order and nothing is pruned.
            let frontier: Vec<u64> = if self.config.step_eval_enabled {
                let mut judged = Vec::with_capacity(child_ids.len());
                for &child_id in &child_ids {
                    let trajectory = Self::chain(run, child_id);
                    let verdict = self
                        .steps
                        .evaluate_step(question, &trajectory, &mut run.meter)
                        .map_err(Interrupt::from)?;
                    self.emit(
                        run,
                        sink,
                        TraceBody::StepEval {
                            node: child_id,
                            category: verdict.category,
                            rationale: verdict.rationale.clone(),
                        },
                    );
                    run.nodes.get_mut(&child_id).unwrap().verdict = Some(verdict.clone());
                    judged.push((child_id, verdict.category));
                }
                rank_frontier(judged)
            } else {
                child_ids.clone()
            };

            if frontier.is_empty() {
                // Every child was pruned as impossible.
                self.emit(
                    run,
                    sink,
                    TraceBody::Backtrack {
                        from_node: node_id,
                        reason: BacktrackReason::DeadEnd,
                    },
                );
                continue;
            }
            stack.push_frontier(node.depth + 1, frontier);
        }

        Ok(BranchVerdict::Exhausted)
    }
}

/// Convenience check used by callers that need to know whether an unsolved
/// outcome may still be retried with a larger budget.
pub fn is_retryable(status: SearchStatus) -> bool {
    matches!(status, SearchStatus::BudgetExceeded)
}
