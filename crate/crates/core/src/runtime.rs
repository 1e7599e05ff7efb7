//! The process layer: threads, channel endpoints, synchronous rendezvous
//! and a deterministic round-robin scheduler.
//!
//! Channel pair `N` has endpoints `2N` and `2N + 1`; the trace names pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::eval::{CommRequest, EvalCtx, Evaluator, Step, Value};
use crate::syntax::{pretty, EndpointId, Pattern, Term};
use crate::types::SessionType;

pub type ThreadId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Total reduction budget across all threads.
    pub max_steps: u64,
    /// Steps a thread may take before yielding.
    pub quantum: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_steps: 1_000_000,
            quantum: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Runnable,
    /// Waiting for the peer of the request's endpoint.
    Blocked(Box<(EvalCtx, CommRequest)>),
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    pub id: ThreadId,
    pub term: Term,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Channel {
    /// Protocol of the even endpoint, when known (`new S`).
    pub session: Option<SessionType>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Sent { chan: u32, payload: String },
    Selected { chan: u32, label: String },
    Closed { chan: u32 },
    Spawned { thread: ThreadId },
    Halted { thread: ThreadId },
}

impl TraceEvent {
    /// `SEQ EVENT chan=N payload=...`
    pub fn render(&self, seq: usize) -> String {
        let (name, chan, payload) = match self {
            TraceEvent::Sent { chan, payload } => ("Sent", chan.to_string(), payload.clone()),
            TraceEvent::Selected { chan, label } => ("Selected", chan.to_string(), label.clone()),
            TraceEvent::Closed { chan } => ("Closed", chan.to_string(), "-".to_string()),
            TraceEvent::Spawned { thread } => ("Spawned", "-".to_string(), format!("t{thread}")),
            TraceEvent::Halted { thread } => ("Halted", "-".to_string(), format!("t{thread}")),
        };
        format!("{seq} {name} chan={chan} payload={payload}")
    }
}

/// Renders a whole trace, one event per line, numbered from 1.
pub fn render_trace(trace: &[TraceEvent]) -> String {
    trace.iter().enumerate().map(|(i, e)| e.render(i + 1) + "\n").collect()
}

pub fn render_value(v: &Value) -> String {
    pretty(v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunResult {
    Success,
    /// Every live thread is blocked; the report lists what each waits for.
    Deadlock(String),
    Timeout,
    Stuck { thread: ThreadId, reason: String },
}

impl fmt::Display for RunResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunResult::Success => write!(f, "ok"),
            RunResult::Deadlock(r) => write!(f, "deadlock: {r}"),
            RunResult::Timeout => write!(f, "timeout: step budget exhausted"),
            RunResult::Stuck { thread, reason } => write!(f, "stuck in t{thread}: {reason}"),
        }
    }
}

#[derive(Debug)]
pub struct Config {
    pub threads: Vec<Thread>,
    /// Live channel pairs.
    pub channels: BTreeMap<u32, Channel>,
    pub trace: Vec<TraceEvent>,
    pub steps: u64,
    next_pair: u32,
    evaluator: Evaluator,
}

fn peer(e: EndpointId) -> EndpointId {
    e ^ 1
}

fn pair_of(e: EndpointId) -> u32 {
    e / 2
}

fn describe(req: &CommRequest) -> String {
    match req {
        CommRequest::Send { chan, .. } => format!("send on @{chan}"),
        CommRequest::Receive { chan } => format!("receive on @{chan}"),
        CommRequest::Select { label, chan } => format!("select {label} on @{chan}"),
        CommRequest::Offer { chan, .. } => format!("match on @{chan}"),
        CommRequest::Close { chan } => format!("close on @{chan}"),
        CommRequest::Wait { chan } => format!("wait on @{chan}"),
        other => format!("{other:?}"),
    }
}

impl Config {
    pub fn new(entry: Term, globals: BTreeMap<String, Term>) -> Self {
        Self {
            threads: vec![Thread {
                id: 0,
                term: entry,
                status: Status::Runnable,
            }],
            channels: BTreeMap::new(),
            trace: Vec::new(),
            steps: 0,
            next_pair: 0,
            evaluator: Evaluator::new(globals),
        }
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    fn alloc_pair(&mut self, session: Option<SessionType>) -> (EndpointId, EndpointId) {
        let n = self.next_pair;
        self.next_pair += 1;
        self.channels.insert(n, Channel { session });
        (2 * n, 2 * n + 1)
    }

    fn spawn(&mut self, term: Term) -> ThreadId {
        let id = self.threads.len();
        self.threads.push(Thread {
            id,
            term,
            status: Status::Runnable,
        });
        self.trace.push(TraceEvent::Spawned { thread: id });
        id
    }

    /// Each endpoint occurs in at most one thread.
    pub fn check_ownership(&self) -> Result<(), String> {
        let mut owner: BTreeMap<EndpointId, ThreadId> = BTreeMap::new();
        for t in &self.threads {
            let mut ids = BTreeSet::new();
            endpoints(&t.term, &mut ids);
            for id in ids {
                if let Some(o) = owner.insert(id, t.id) {
                    return Err(format!("endpoint @{id} held by t{o} and t{}", t.id));
                }
            }
        }
        Ok(())
    }

    /// Runs until every thread is done, all live threads block, the budget
    /// runs out, or a thread is stuck.
    pub fn run(&mut self, opts: RunOptions, mut step_trace: Option<&mut dyn FnMut(String)>) -> RunResult {
        loop {
            if self.threads.iter().all(|t| t.status == Status::Done) {
                return RunResult::Success;
            }
            let runnable: Vec<ThreadId> = self
                .threads
                .iter()
                .filter(|t| t.status == Status::Runnable)
                .map(|t| t.id)
                .collect();
            if runnable.is_empty() {
                return RunResult::Deadlock(self.deadlock_report());
            }
            for id in runnable {
                if self.threads[id].status != Status::Runnable {
                    continue;
                }
                if let Some(r) = self.quantum(id, opts, &mut step_trace) {
                    return r;
                }
            }
        }
    }

    fn deadlock_report(&self) -> String {
        self.threads
            .iter()
            .filter_map(|t| match &t.status {
                Status::Blocked(b) => Some(format!("t{} blocked on {}", t.id, describe(&b.1))),
                _ => None,
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    /// Runs thread `id` for up to one quantum. Returns a final result if
    /// the whole run must stop.
    fn quantum(&mut self, id: ThreadId, opts: RunOptions, step_trace: &mut Option<&mut dyn FnMut(String)>) -> Option<RunResult> {
        for _ in 0..opts.quantum {
            if self.threads[id].term.is_value() {
                self.halt(id);
                return None;
            }
            if self.steps >= opts.max_steps {
                return Some(RunResult::Timeout);
            }
            let term = self.threads[id].term.clone();
            match self.evaluator.step(term) {
                Step::IsValue => unreachable!(),
                Step::Stepped(next, redex) => {
                    self.steps += 1;
                    if let Some(tr) = step_trace.as_deref_mut() {
                        tr(format!("t{id} {}", crate::eval::trace_line(self.steps, redex.name(), &next)));
                    }
                    self.threads[id].term = next;
                }
                Step::NeedsComm(ctx, req) => {
                    self.steps += 1;
                    match self.communicate(id, ctx, req) {
                        Ok(true) => {}
                        Ok(false) => return None,
                        Err(reason) => return Some(RunResult::Stuck { thread: id, reason }),
                    }
                }
                Step::Stuck(reason) => return Some(RunResult::Stuck { thread: id, reason }),
            }
        }
        if self.threads[id].term.is_value() {
            self.halt(id);
        }
        None
    }

    fn halt(&mut self, id: ThreadId) {
        self.threads[id].status = Status::Done;
        self.trace.push(TraceEvent::Halted { thread: id });
    }

    /// Resolves a request. Returns whether the thread may keep running.
    fn communicate(&mut self, id: ThreadId, ctx: EvalCtx, req: CommRequest) -> Result<bool, String> {
        match req {
            CommRequest::New { session } => {
                let (a, b) = self.alloc_pair(Some(session));
                self.threads[id].term = ctx.plug(Term::pair(Term::Chan(a), Term::Chan(b)));
                Ok(true)
            }
            CommRequest::Fork { thunk } => {
                self.spawn(Term::app(thunk, Term::Unit));
                self.threads[id].term = ctx.plug(Term::Unit);
                Ok(true)
            }
            CommRequest::ForkWith { thunk } => {
                let (a, b) = self.alloc_pair(None);
                self.spawn(Term::app(Term::app(thunk, Term::Unit), Term::Chan(a)));
                self.threads[id].term = ctx.plug(Term::Chan(b));
                Ok(true)
            }
            req => {
                let e = req.endpoint().expect("channel operation");
                let partner = self.threads.iter().position(|t| {
                    matches!(&t.status, Status::Blocked(b) if b.1.endpoint() == Some(peer(e)))
                });
                let Some(p) = partner else {
                    self.threads[id].status = Status::Blocked(Box::new((ctx, req)));
                    return Ok(false);
                };
                let Status::Blocked(b) = self.threads[p].status.clone() else {
                    unreachable!()
                };
                let (pctx, preq) = *b;
                match self.rendezvous((ctx.clone(), req.clone()), (pctx, preq))? {
                    Some((mine, theirs)) => {
                        self.threads[id].term = mine;
                        self.threads[p].term = theirs;
                        self.threads[p].status = Status::Runnable;
                        Ok(true)
                    }
                    None => {
                        // not complementary: both wait, which ends in deadlock
                        self.threads[id].status = Status::Blocked(Box::new((ctx, req)));
                        Ok(false)
                    }
                }
            }
        }
    }

    /// Completes a matching pair of requests; returns the plugged terms.
    fn rendezvous(
        &mut self,
        (c1, r1): (EvalCtx, CommRequest),
        (c2, r2): (EvalCtx, CommRequest),
    ) -> Result<Option<(Term, Term)>, String> {
        use CommRequest::*;
        Ok(Some(match (r1, r2) {
            (Send { value, chan }, Receive { chan: rc }) => {
                self.trace.push(TraceEvent::Sent {
                    chan: pair_of(chan),
                    payload: render_value(&value),
                });
                (c1.plug(Term::Chan(chan)), c2.plug(Term::pair(value, Term::Chan(rc))))
            }
            (Receive { chan: rc }, Send { value, chan }) => {
                self.trace.push(TraceEvent::Sent {
                    chan: pair_of(chan),
                    payload: render_value(&value),
                });
                (c1.plug(Term::pair(value, Term::Chan(rc))), c2.plug(Term::Chan(chan)))
            }
            (Select { label, chan }, Offer { chan: oc, arms }) => {
                let body = self.branch(&label, oc, &arms)?;
                self.trace.push(TraceEvent::Selected { chan: pair_of(chan), label });
                (c1.plug(Term::Chan(chan)), c2.plug(body))
            }
            (Offer { chan: oc, arms }, Select { label, chan }) => {
                let body = self.branch(&label, oc, &arms)?;
                self.trace.push(TraceEvent::Selected { chan: pair_of(chan), label });
                (c1.plug(body), c2.plug(Term::Chan(chan)))
            }
            (Close { chan }, Wait { .. }) | (Wait { .. }, Close { chan }) => {
                self.channels.remove(&pair_of(chan));
                self.trace.push(TraceEvent::Closed { chan: pair_of(chan) });
                (c1.plug(Term::Unit), c2.plug(Term::Unit))
            }
            _ => return Ok(None),
        }))
    }

    fn branch(&mut self, label: &str, chan: EndpointId, arms: &[crate::syntax::Arm]) -> Result<Term, String> {
        for a in arms {
            if let Pattern::Label(l, b) = &a.pat {
                if l == label {
                    return self
                        .evaluator
                        .bind_value(b, Term::Chan(chan), &a.body)
                        .map_err(|e| e.to_string());
                }
            }
        }
        Err(format!("no branch for label `{label}`"))
    }
}

fn endpoints(t: &Term, out: &mut BTreeSet<EndpointId>) {
    match t {
        Term::Chan(id) => {
            out.insert(*id);
        }
        Term::Unit | Term::Int(_) | Term::Const(_) => {}
        Term::Var { args, .. } => args.iter().for_each(|a| endpoints(&a.body, out)),
        Term::Lam(_, b) => endpoints(b, out),
        Term::App(a, b) | Term::LetUnit(a, b) | Term::Arith(_, a, b) | Term::Pair(a, b) => {
            endpoints(a, out);
            endpoints(b, out);
        }
        Term::Box(cv) => endpoints(&cv.body, out),
        Term::LetBox { bound: a, body: b, .. } | Term::LetPair { scrut: a, body: b, .. } => {
            endpoints(a, out);
            endpoints(b, out);
        }
        Term::Match { scrut, arms } => {
            endpoints(scrut, out);
            arms.iter().for_each(|a| endpoints(&a.body, out));
        }
    }
}

/// Runs `entry` as thread 0 with the given top-level definitions.
pub fn run_config(
    entry: Term,
    globals: BTreeMap<String, Term>,
    opts: RunOptions,
    step_trace: Option<&mut dyn FnMut(String)>,
) -> (Config, RunResult) {
    let mut cfg = Config::new(entry, globals);
    let r = cfg.run(opts, step_trace);
    (cfg, r)
}
