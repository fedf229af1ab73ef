//! Filter-cluster scheduling.
//!
//! A stride plan becomes a priority queue of per-frame filtering tasks:
//! stride-1 frames next to a stride-2 frame need both passes (priority 1),
//! stride-2 frames come next (priority 2) and standalone stride-1 frames last
//! (priority 3). The queue is dispatched in order onto `m` identical filters,
//! each task going to whichever filter frees up first (lowest index on ties).
//! Every task is ready at cycle 0, so this is list scheduling and the
//! simulation only needs the filters' next-free times.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::sparsity::{Stride, StridePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Stride1,
    Stride2,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Stride1 => "STRIDE1",
            TaskKind::Stride2 => "STRIDE2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Task {
    pub kind: TaskKind,
    pub frame_index: usize,
    /// 1 (highest) to 3.
    pub priority: u8,
}

/// Tasks in dispatch order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PriorityQueue {
    pub tasks: Vec<Task>,
    pub frame_len: usize,
    pub n_samples: usize,
}

impl PriorityQueue {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn with_priority(&self, priority: u8) -> impl Iterator<Item = &Task> {
        self.tasks.iter().filter(move |t| t.priority == priority)
    }
}

pub fn assign_priorities(plan: &StridePlan) -> PriorityQueue {
    let s = &plan.strides;
    let (mut p1, mut p2, mut p3) = (Vec::new(), Vec::new(), Vec::new());
    let task = |kind, frame_index, priority| Task {
        kind,
        frame_index,
        priority,
    };
    for (i, &stride) in s.iter().enumerate() {
        match stride {
            Stride::Skip => {}
            Stride::Full => {
                let prev = i.checked_sub(1).map(|j| s[j]);
                let next = s.get(i + 1).copied();
                if prev == Some(Stride::Half) || next == Some(Stride::Half) {
                    p1.push(task(TaskKind::Stride2, i, 1));
                    p1.push(task(TaskKind::Stride1, i, 1));
                } else {
                    p3.push(task(TaskKind::Stride1, i, 3));
                }
            }
            Stride::Half => p2.push(task(TaskKind::Stride2, i, 2)),
        }
    }
    p1.extend(p2);
    p1.extend(p3);
    PriorityQueue {
        tasks: p1,
        frame_len: plan.frame_len,
        n_samples: plan.n_samples,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub cycles_per_sample_per_band: u64,
    pub n_bands: u64,
    /// Five-stage filter pipeline.
    pub pipeline_fill: u64,
    /// Three low-pass biquads ahead of every stride-2 pass.
    pub lpf_cycles_per_sample: u64,
    pub pre_emphasis_cycles_per_sample: u64,
    pub clock_hz: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            cycles_per_sample_per_band: 1,
            n_bands: 40,
            pipeline_fill: 5,
            lpf_cycles_per_sample: 3,
            pre_emphasis_cycles_per_sample: 1,
            clock_hz: 50e6,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        if self.cycles_per_sample_per_band == 0 || self.n_bands == 0 {
            return Err(Error::invalid("cost model needs positive per-band cost and band count"));
        }
        if !(self.clock_hz > 0.0 && self.clock_hz.is_finite()) {
            return Err(Error::invalid("clock must be positive"));
        }
        Ok(())
    }

    /// Serial pre-emphasis pass over the clip, run once before any task.
    pub fn prologue_cycles(&self, n_samples: usize) -> u64 {
        n_samples as u64 * self.pre_emphasis_cycles_per_sample + self.pipeline_fill
    }

    pub fn seconds(&self, cycles: u64) -> f64 {
        cycles as f64 / self.clock_hz
    }
}

pub fn task_duration(task: &Task, cost: &CostModel, frame_len: usize) -> u64 {
    let l = frame_len as u64;
    let per_band = cost.n_bands * cost.cycles_per_sample_per_band;
    match task.kind {
        TaskKind::Stride1 => l * per_band + cost.pipeline_fill,
        TaskKind::Stride2 => l.div_ceil(2) * per_band + l * cost.lpf_cycles_per_sample + cost.pipeline_fill,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub filter: usize,
    pub task: Task,
    pub start: u64,
    pub end: u64,
}

/// Simulated timeline; entries are in dispatch order. Cycle 0 is the end of
/// the pre-emphasis prologue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleTrace {
    pub n_filters: usize,
    pub entries: Vec<TraceEntry>,
    pub makespan: u64,
    pub busy: Vec<u64>,
}

impl ScheduleTrace {
    pub fn total_work(&self) -> u64 {
        self.busy.iter().sum()
    }

    /// Busy fraction of the cluster over the makespan; 0 for an empty trace.
    pub fn utilization(&self) -> f64 {
        if self.makespan == 0 {
            0.0
        } else {
            self.total_work() as f64 / (self.n_filters as u64 * self.makespan) as f64
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "filter_id,task_kind,frame_index,priority,start_cycle,end_cycle")?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                e.filter, e.task.kind, e.task.frame_index, e.task.priority, e.start, e.end
            )?;
        }
        Ok(())
    }
}

pub fn simulate(queue: &PriorityQueue, m: usize, cost: &CostModel) -> Result<ScheduleTrace> {
    if m == 0 {
        return Err(Error::invalid("need at least one filter"));
    }
    cost.validate()?;
    let mut free: BinaryHeap<Reverse<(u64, usize)>> = (0..m).map(|f| Reverse((0, f))).collect();
    let mut busy = vec![0u64; m];
    let mut entries = Vec::with_capacity(queue.len());
    let mut makespan = 0;
    for task in &queue.tasks {
        let Reverse((start, filter)) = free.pop().expect("heap holds m filters");
        let end = start + task_duration(task, cost, queue.frame_len);
        busy[filter] += end - start;
        makespan = makespan.max(end);
        entries.push(TraceEntry {
            filter,
            task: *task,
            start,
            end,
        });
        free.push(Reverse((end, filter)));
    }
    Ok(ScheduleTrace {
        n_filters: m,
        entries,
        makespan,
        busy,
    })
}

/// Seconds for one front-end pass: pre-emphasis prologue plus the makespan.
pub fn latency_of(plan: &StridePlan, m: usize, cost: &CostModel) -> Result<f64> {
    let queue = assign_priorities(plan);
    let trace = simulate(&queue, m, cost)?;
    Ok(cost.seconds(cost.prologue_cycles(plan.n_samples) + trace.makespan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparsity::{plan_from_scores, FrameScore, StrideConfig};
    use proptest::prelude::*;

    pub(crate) fn plan_of(strides: &[u8]) -> StridePlan {
        let scores = strides
            .iter()
            .map(|_| FrameScore { ste: 1.0, zcc: 0, a_diff: 0.0, s_frame: 0.0 })
            .collect();
        let mut p = plan_from_scores(scores, &StrideConfig::default(), 256, 16_000);
        p.strides = strides.iter().map(|&s| Stride::from_u8(s).unwrap()).collect();
        p
    }

    fn t(kind: TaskKind, frame_index: usize, priority: u8) -> Task {
        Task { kind, frame_index, priority }
    }

    #[test]
    fn queue_for_one_two_one() {
        use TaskKind::*;
        let q = assign_priorities(&plan_of(&[1, 2, 1]));
        assert_eq!(
            q.tasks,
            vec![t(Stride2, 0, 1), t(Stride1, 0, 1), t(Stride2, 2, 1), t(Stride1, 2, 1), t(Stride2, 1, 2)]
        );
    }

    #[test]
    fn queue_edge_cases() {
        assert!(assign_priorities(&plan_of(&[0, 0, 0])).is_empty());
        let q = assign_priorities(&plan_of(&[1, 1, 1]));
        assert_eq!(q.len(), 3);
        assert!(q.tasks.iter().all(|t| t.priority == 3 && t.kind == TaskKind::Stride1));
        // a skipped frame in between breaks adjacency
        let q = assign_priorities(&plan_of(&[1, 0, 2]));
        assert_eq!(q.tasks, vec![t(TaskKind::Stride2, 2, 2), t(TaskKind::Stride1, 0, 3)]);
    }

    #[test]
    fn durations() {
        let cost = CostModel::default();
        assert_eq!(task_duration(&t(TaskKind::Stride1, 0, 3), &cost, 256), 10_245);
        assert_eq!(task_duration(&t(TaskKind::Stride2, 0, 2), &cost, 256), 5_893);
        let tiny = CostModel { n_bands: 1, pipeline_fill: 0, ..cost };
        assert_eq!(task_duration(&t(TaskKind::Stride1, 0, 3), &tiny, 1), 1);
    }

    #[test]
    fn simple_schedules() {
        let cost = CostModel::default();
        let one = assign_priorities(&plan_of(&[1]));
        for m in 1..5 {
            assert_eq!(simulate(&one, m, &cost).unwrap().makespan, 10_245);
        }
        let four = assign_priorities(&plan_of(&[1, 1, 1, 1]));
        assert_eq!(simulate(&four, 1, &cost).unwrap().makespan, 4 * 10_245);
        assert_eq!(simulate(&four, 2, &cost).unwrap().makespan, 2 * 10_245);
        assert!(simulate(&four, 0, &cost).is_err());
    }

    #[test]
    fn empty_plan_latency_is_prologue() {
        let cost = CostModel::default();
        let lat = latency_of(&plan_of(&[0, 0]), 4, &cost).unwrap();
        assert_eq!(lat, 16_005.0 / 50e6);
    }

    #[test]
    fn csv_layout() {
        let q = assign_priorities(&plan_of(&[2, 1]));
        let trace = simulate(&q, 2, &CostModel::default()).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "filter_id,task_kind,frame_index,priority,start_cycle,end_cycle");
        assert_eq!(lines[1], "0,STRIDE2,1,1,0,5893");
        assert_eq!(lines[2], "1,STRIDE1,1,1,0,10245");
        assert_eq!(lines[3], "0,STRIDE2,0,2,5893,11786");
    }

    /// Time-stepped replay: at each completion instant, idle filters take the
    /// next queued task in index order.
    fn replay(durs: &[u64], m: usize) -> (u64, Vec<(usize, u64)>) {
        let mut busy_until = vec![0u64; m];
        let mut next = 0;
        let mut now = 0;
        let mut order = Vec::new();
        while next < durs.len() {
            for f in 0..m {
                if busy_until[f] <= now && next < durs.len() {
                    busy_until[f] = now + durs[next];
                    order.push((f, now));
                    next += 1;
                }
            }
            if let Some(t) = busy_until.iter().copied().filter(|&b| b > now).min() {
                now = t;
            }
        }
        (busy_until.into_iter().max().unwrap_or(0), order)
    }

    fn strides_strategy() -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..3, 0..60)
    }

    proptest! {
        #[test]
        fn matches_replay_oracle(strides in proptest::collection::vec(0u8..3, 0..8), m in 1usize..4) {
            let cost = CostModel::default();
            let q = assign_priorities(&plan_of(&strides));
            let trace = simulate(&q, m, &cost).unwrap();
            let durs: Vec<u64> = q.tasks.iter().map(|t| task_duration(t, &cost, 256)).collect();
            let (makespan, order) = replay(&durs, m);
            prop_assert_eq!(trace.makespan, makespan);
            let got: Vec<(usize, u64)> = trace.entries.iter().map(|e| (e.filter, e.start)).collect();
            prop_assert_eq!(got, order);
        }

        #[test]
        fn list_scheduling_invariants(strides in strides_strategy(), m in 1usize..32) {
            let cost = CostModel::default();
            let q = assign_priorities(&plan_of(&strides));
            let trace = simulate(&q, m, &cost).unwrap();
            let work: u64 = q.tasks.iter().map(|t| task_duration(t, &cost, 256)).sum();
            let longest = q.tasks.iter().map(|t| task_duration(t, &cost, 256)).max().unwrap_or(0);
            prop_assert_eq!(trace.total_work(), work);
            prop_assert!(trace.makespan as f64 >= work as f64 / m as f64);
            prop_assert!(trace.makespan as f64 <= work as f64 / m as f64 + longest as f64);
            // dispatch follows queue order exactly
            let tasks: Vec<Task> = trace.entries.iter().map(|e| e.task).collect();
            prop_assert_eq!(&tasks, &q.tasks);
            // no filter sits idle while a later task waits
            let last_start = trace.entries.iter().map(|e| e.start).max().unwrap_or(0);
            for f in 0..m {
                let mut t = 0;
                for e in trace.entries.iter().filter(|e| e.filter == f) {
                    prop_assert_eq!(e.start, t);
                    t = e.end;
                }
                prop_assert!(t >= last_start);
            }
        }

        #[test]
        fn more_filters_never_slower(strides in strides_strategy(), m in 1usize..40) {
            let cost = CostModel::default();
            let plan = plan_of(&strides);
            let q = assign_priorities(&plan);
            let a = simulate(&q, m, &cost).unwrap().makespan;
            let b = simulate(&q, m + 1, &cost).unwrap().makespan;
            prop_assert!(b <= a);
            if m >= q.len() {
                prop_assert_eq!(a, b);
            }
            prop_assert!(latency_of(&plan, m + 1, &cost).unwrap() <= latency_of(&plan, m, &cost).unwrap());
        }

        #[test]
        fn p1_iff_full_next_to_half(strides in strides_strategy()) {
            let q = assign_priorities(&plan_of(&strides));
            for (i, &s) in strides.iter().enumerate() {
                let neighbor_half = (i > 0 && strides[i - 1] == 2) || strides.get(i + 1) == Some(&2);
                let has_p1 = q.with_priority(1).any(|t| t.frame_index == i);
                prop_assert_eq!(has_p1, s == 1 && neighbor_half);
            }
            let prios: Vec<u8> = q.tasks.iter().map(|t| t.priority).collect();
            prop_assert!(prios.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
