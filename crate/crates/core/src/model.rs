//! Builds, jobs, machine types, and the two-part chromosome.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// One CI job. Runs non-preemptively on a single machine of `machine_type`.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub name: String,
    pub deps: Vec<String>,
    pub machine_type: String,
    /// Explicit run time in seconds; takes precedence over any estimate.
    pub declared_run_time: Option<f64>,
}

impl Job {
    pub fn new(name: impl Into<String>, machine_type: impl Into<String>) -> Self {
        Job {
            name: name.into(),
            deps: Vec::new(),
            machine_type: machine_type.into(),
            declared_run_time: None,
        }
    }

    pub fn with_deps<I, S>(mut self, deps: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.deps = deps.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_run_time(mut self, secs: f64) -> Self {
        self.declared_run_time = Some(secs);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineType {
    pub name: String,
    /// Upper bound on allocatable machines of this type.
    pub max_count: u32,
}

impl MachineType {
    pub fn new(name: impl Into<String>, max_count: u32) -> Self {
        MachineType {
            name: name.into(),
            max_count,
        }
    }
}

/// A problem instance. The order of `jobs` is the user's original priority list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Build {
    pub jobs: Vec<Job>,
    pub machine_types: Vec<MachineType>,
}

impl Build {
    pub fn new(jobs: Vec<Job>, machine_types: Vec<MachineType>) -> Self {
        Build {
            jobs,
            machine_types,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuildIssue {
    EmptyJobName { index: usize },
    DuplicateJob(String),
    SelfDependency(String),
    DuplicateDependency { job: String, dep: String },
    UnresolvedDependency { job: String, missing: String },
    UnknownMachineType { job: String, machine_type: String },
    DuplicateMachineType(String),
    EmptyMachineTypeName { index: usize },
    ZeroMaxCount(String),
    InvalidRunTime { job: String },
    /// Jobs on one dependency cycle, in dependency order.
    Cycle(Vec<String>),
}

impl fmt::Display for BuildIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildIssue::EmptyJobName { index } => write!(f, "jobs[{index}]: empty job name"),
            BuildIssue::DuplicateJob(n) => write!(f, "duplicate job name `{n}`"),
            BuildIssue::SelfDependency(n) => write!(f, "job `{n}` depends on itself"),
            BuildIssue::DuplicateDependency { job, dep } => {
                write!(f, "job `{job}` lists dependency `{dep}` more than once")
            }
            BuildIssue::UnresolvedDependency { job, missing } => {
                write!(f, "job `{job}` depends on undeclared job `{missing}`")
            }
            BuildIssue::UnknownMachineType { job, machine_type } => {
                write!(f, "job `{job}` uses undeclared machine type `{machine_type}`")
            }
            BuildIssue::DuplicateMachineType(n) => write!(f, "duplicate machine type `{n}`"),
            BuildIssue::EmptyMachineTypeName { index } => {
                write!(f, "machine_types[{index}]: empty name")
            }
            BuildIssue::ZeroMaxCount(n) => write!(f, "machine type `{n}` has max_count 0"),
            BuildIssue::InvalidRunTime { job } => {
                write!(f, "job `{job}` has a non-positive run_time")
            }
            BuildIssue::Cycle(jobs) => write!(f, "dependency cycle: {}", jobs.join(" -> ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub issues: Vec<BuildIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidBuild(self.issues))
        }
    }
}

/// Checks every structural invariant of a build, including acyclicity.
pub fn validate_build(build: &Build) -> ValidationReport {
    let mut issues = structural_issues(build);
    if issues.is_empty() {
        let index = Instance::index_unchecked(build.clone());
        if let Some(cycle) = index.find_cycle() {
            issues.push(BuildIssue::Cycle(cycle));
        }
    }
    ValidationReport { issues }
}

fn structural_issues(build: &Build) -> Vec<BuildIssue> {
    let mut issues = Vec::new();

    let mut type_names = HashSet::new();
    for (i, mt) in build.machine_types.iter().enumerate() {
        if mt.name.is_empty() {
            issues.push(BuildIssue::EmptyMachineTypeName { index: i });
        } else if !type_names.insert(mt.name.as_str()) {
            issues.push(BuildIssue::DuplicateMachineType(mt.name.clone()));
        }
        if mt.max_count == 0 {
            issues.push(BuildIssue::ZeroMaxCount(mt.name.clone()));
        }
    }

    let mut job_names = HashSet::new();
    for (i, job) in build.jobs.iter().enumerate() {
        if job.name.is_empty() {
            issues.push(BuildIssue::EmptyJobName { index: i });
        } else if !job_names.insert(job.name.as_str()) {
            issues.push(BuildIssue::DuplicateJob(job.name.clone()));
        }
    }

    for job in &build.jobs {
        let mut seen = HashSet::new();
        for dep in &job.deps {
            if dep == &job.name {
                issues.push(BuildIssue::SelfDependency(job.name.clone()));
            } else if !seen.insert(dep.as_str()) {
                issues.push(BuildIssue::DuplicateDependency {
                    job: job.name.clone(),
                    dep: dep.clone(),
                });
            } else if !job_names.contains(dep.as_str()) {
                issues.push(BuildIssue::UnresolvedDependency {
                    job: job.name.clone(),
                    missing: dep.clone(),
                });
            }
        }
        if !type_names.contains(job.machine_type.as_str()) {
            issues.push(BuildIssue::UnknownMachineType {
                job: job.name.clone(),
                machine_type: job.machine_type.clone(),
            });
        }
        if let Some(rt) = job.declared_run_time {
            if !(rt > 0.0 && rt.is_finite()) {
                issues.push(BuildIssue::InvalidRunTime {
                    job: job.name.clone(),
                });
            }
        }
    }
    issues
}

/// A build with all name references resolved to indices.
///
/// Job `i` is `build.jobs[i]`; priority lists are permutations of `0..n_jobs`.
/// [`Instance::new`] only requires reference integrity, so cyclic builds can
/// still be indexed (and simulated to a deadlock). [`Instance::validated`]
/// also rejects cycles and is what the optimizer requires.
#[derive(Debug, Clone)]
pub struct Instance {
    build: Build,
    by_name: HashMap<String, usize>,
    deps: Vec<Vec<usize>>,
    dependents: Vec<Vec<usize>>,
    job_type: Vec<usize>,
    acyclic: bool,
}

impl Instance {
    pub fn new(build: Build) -> Result<Self> {
        let issues = structural_issues(&build);
        if !issues.is_empty() {
            return Err(Error::InvalidBuild(issues));
        }
        Ok(Self::index_unchecked(build))
    }

    pub fn validated(build: Build) -> Result<Self> {
        let inst = Self::new(build)?;
        if let Some(cycle) = inst.find_cycle() {
            return Err(Error::InvalidBuild(vec![BuildIssue::Cycle(cycle)]));
        }
        Ok(inst)
    }

    // Caller guarantees structural validity.
    fn index_unchecked(build: Build) -> Self {
        let by_name: HashMap<String, usize> = build
            .jobs
            .iter()
            .enumerate()
            .map(|(i, j)| (j.name.clone(), i))
            .collect();
        let type_idx: HashMap<&str, usize> = build
            .machine_types
            .iter()
            .enumerate()
            .map(|(i, t)| (t.name.as_str(), i))
            .collect();
        let n = build.jobs.len();
        let mut deps = vec![Vec::new(); n];
        let mut dependents = vec![Vec::new(); n];
        let mut job_type = Vec::with_capacity(n);
        for (i, job) in build.jobs.iter().enumerate() {
            for d in &job.deps {
                let di = by_name[d.as_str()];
                deps[i].push(di);
                dependents[di].push(i);
            }
            job_type.push(type_idx[job.machine_type.as_str()]);
        }
        let mut inst = Instance {
            build,
            by_name,
            deps,
            dependents,
            job_type,
            acyclic: false,
        };
        inst.acyclic = inst.topological_order().is_some();
        inst
    }

    pub fn build(&self) -> &Build {
        &self.build
    }

    pub fn n_jobs(&self) -> usize {
        self.build.jobs.len()
    }

    pub fn n_types(&self) -> usize {
        self.build.machine_types.len()
    }

    pub fn job(&self, i: usize) -> &Job {
        &self.build.jobs[i]
    }

    pub fn job_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn deps(&self, i: usize) -> &[usize] {
        &self.deps[i]
    }

    pub fn dependents(&self, i: usize) -> &[usize] {
        &self.dependents[i]
    }

    /// Machine type index of job `i`.
    pub fn job_type(&self, i: usize) -> usize {
        self.job_type[i]
    }

    pub fn machine_types(&self) -> &[MachineType] {
        &self.build.machine_types
    }

    pub fn is_acyclic(&self) -> bool {
        self.acyclic
    }

    /// Kahn's algorithm, smallest index first among ready jobs.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.n_jobs();
        let mut indeg: Vec<usize> = self.deps.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for &d in &self.dependents[i] {
                indeg[d] -= 1;
                if indeg[d] == 0 {
                    queue.push_back(d);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Names of the jobs on one dependency cycle, if any exists.
    pub fn find_cycle(&self) -> Option<Vec<String>> {
        let n = self.n_jobs();
        let mut indeg: Vec<usize> = self.deps.iter().map(Vec::len).collect();
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut removed = vec![false; n];
        while let Some(i) = queue.pop() {
            removed[i] = true;
            for &d in &self.dependents[i] {
                indeg[d] -= 1;
                if indeg[d] == 0 {
                    queue.push(d);
                }
            }
        }
        // Every job left over has a dependency that is also left over, so
        // walking dependencies from any of them must revisit a job.
        let start = (0..n).find(|&i| !removed[i])?;
        let mut pos_in_walk = vec![usize::MAX; n];
        let mut walk = Vec::new();
        let mut cur = start;
        while pos_in_walk[cur] == usize::MAX {
            pos_in_walk[cur] = walk.len();
            walk.push(cur);
            cur = *self.deps[cur].iter().find(|&&d| !removed[d])?;
        }
        let mut cycle: Vec<String> = walk[pos_in_walk[cur]..]
            .iter()
            .map(|&i| self.build.jobs[i].name.clone())
            .collect();
        cycle.reverse();
        Some(cycle)
    }

    pub fn original_order(&self) -> Vec<usize> {
        (0..self.n_jobs()).collect()
    }

    pub fn names_of(&self, priority: &[usize]) -> Vec<String> {
        priority
            .iter()
            .map(|&i| self.build.jobs[i].name.clone())
            .collect()
    }

    /// Resolves a list of job names to indices; the list must be a permutation.
    pub fn resolve_priority<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            let i = self
                .job_index(n)
                .ok_or_else(|| Error::contract(format!("unknown job `{n}` in priority list")))?;
            out.push(i);
        }
        if !is_permutation(&out, self.n_jobs()) {
            return Err(Error::contract(
                "priority list is not a permutation of the build's jobs",
            ));
        }
        Ok(out)
    }
}

pub fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &x in p {
        if x >= n || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

/// Allocated machine count per type, aligned with the build's machine types.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MachineAllocation {
    pub counts: Vec<u32>,
}

impl MachineAllocation {
    pub fn new(counts: Vec<u32>) -> Self {
        MachineAllocation { counts }
    }

    /// Every type at its `max_count`.
    pub fn max_of(types: &[MachineType]) -> Self {
        MachineAllocation {
            counts: types.iter().map(|t| t.max_count).collect(),
        }
    }

    pub fn min_of(types: &[MachineType]) -> Self {
        MachineAllocation {
            counts: vec![1; types.len()],
        }
    }

    /// Total machines summed over all types.
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn check(&self, types: &[MachineType]) -> Result<()> {
        if self.counts.len() != types.len() {
            return Err(Error::Layout(format!(
                "allocation has {} entries for {} machine types",
                self.counts.len(),
                types.len()
            )));
        }
        for (&c, t) in self.counts.iter().zip(types) {
            if c < 1 || c > t.max_count {
                return Err(Error::CountOutOfRange {
                    machine_type: t.name.clone(),
                    count: c,
                    max: t.max_count,
                });
            }
        }
        Ok(())
    }

    pub fn named(&self, types: &[MachineType]) -> BTreeMap<String, u32> {
        types
            .iter()
            .zip(&self.counts)
            .map(|(t, &c)| (t.name.clone(), c))
            .collect()
    }

    pub fn from_named(named: &BTreeMap<String, u32>, types: &[MachineType]) -> Result<Self> {
        let mut counts = Vec::with_capacity(types.len());
        for t in types {
            let c = named.get(&t.name).copied().ok_or_else(|| {
                Error::contract(format!("allocation missing machine type `{}`", t.name))
            })?;
            counts.push(c);
        }
        if let Some(extra) = named.keys().find(|k| !types.iter().any(|t| &t.name == *k)) {
            return Err(Error::contract(format!(
                "allocation names unknown machine type `{extra}`"
            )));
        }
        let alloc = MachineAllocation { counts };
        alloc.check(types)?;
        Ok(alloc)
    }

    /// Every allocation with `1 <= count <= max_count` per type, in
    /// lexicographic order.
    pub fn enumerate(types: &[MachineType]) -> Vec<MachineAllocation> {
        let mut out = vec![MachineAllocation { counts: Vec::new() }];
        for t in types {
            out = out
                .into_iter()
                .flat_map(|a| {
                    (1..=t.max_count).map(move |c| {
                        let mut counts = a.counts.clone();
                        counts.push(c);
                        MachineAllocation { counts }
                    })
                })
                .collect();
        }
        out
    }
}

/// Number of bits needed to hold `max_count`, i.e. `ceil(log2(max_count + 1))`.
pub fn segment_width(max_count: u32) -> usize {
    (u32::BITS - max_count.leading_zeros()) as usize
}

/// Second chromosome part: one fixed-width, most-significant-bit-first
/// segment per machine type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MachineBits {
    pub segments: Vec<Vec<bool>>,
}

impl MachineBits {
    pub fn encode(alloc: &MachineAllocation, types: &[MachineType]) -> Result<Self> {
        alloc.check(types)?;
        let segments = alloc
            .counts
            .iter()
            .zip(types)
            .map(|(&c, t)| {
                let w = segment_width(t.max_count);
                (0..w).rev().map(|b| (c >> b) & 1 == 1).collect()
            })
            .collect();
        Ok(MachineBits { segments })
    }

    /// Unsigned value of each segment, clamped into `[1, max_count]`.
    pub fn decode(&self, types: &[MachineType]) -> Result<MachineAllocation> {
        self.check_layout(types)?;
        let counts = self
            .segments
            .iter()
            .zip(types)
            .map(|(seg, t)| {
                let v = seg.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
                v.clamp(1, t.max_count as u64) as u32
            })
            .collect();
        Ok(MachineAllocation { counts })
    }

    pub fn check_layout(&self, types: &[MachineType]) -> Result<()> {
        if self.segments.len() != types.len() {
            return Err(Error::Layout(format!(
                "{} segments for {} machine types",
                self.segments.len(),
                types.len()
            )));
        }
        for (seg, t) in self.segments.iter().zip(types) {
            let w = segment_width(t.max_count);
            if seg.len() != w {
                return Err(Error::Layout(format!(
                    "segment for `{}` has width {}, expected {w}",
                    t.name,
                    seg.len()
                )));
            }
        }
        Ok(())
    }

    pub fn total_bits(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    /// Parses segments written as `"101"` strings.
    pub fn from_strings<S: AsRef<str>>(segments: &[S]) -> Result<Self> {
        let segments = segments
            .iter()
            .map(|s| {
                s.as_ref()
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::Parse {
                            context: "machine bits".into(),
                            message: format!("unexpected character `{other}`"),
                        }),
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<_>>()?;
        Ok(MachineBits { segments })
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.segments
            .iter()
            .map(|s| s.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect()
    }
}

impl fmt::Display for MachineBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_strings().join("|"))
    }
}

/// A GA individual: priority list (job indices) plus machine-count bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    pub priority: Vec<usize>,
    pub machine_bits: MachineBits,
}

impl Chromosome {
    pub fn allocation(&self, types: &[MachineType]) -> Result<MachineAllocation> {
        self.machine_bits.decode(types)
    }

    pub fn priority_names(&self, inst: &Instance) -> Vec<String> {
        inst.names_of(&self.priority)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn types() -> Vec<MachineType> {
        vec![MachineType::new("linux", 5)]
    }

    #[test]
    fn two_node_dag_is_ok() {
        let b = Build::new(
            vec![Job::new("A", "linux"), Job::new("B", "linux").with_deps(["A"])],
            types(),
        );
        assert!(validate_build(&b).is_ok());
    }

    #[test]
    fn two_cycle_is_named() {
        let b = Build::new(
            vec![
                Job::new("A", "linux").with_deps(["B"]),
                Job::new("B", "linux").with_deps(["A"]),
            ],
            types(),
        );
        let report = validate_build(&b);
        match report.issues.as_slice() {
            [BuildIssue::Cycle(c)] => {
                let mut c = c.clone();
                c.sort();
                assert_eq!(c, vec!["A", "B"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dangling_reference_names_target() {
        let b = Build::new(vec![Job::new("A", "linux").with_deps(["X"])], types());
        let report = validate_build(&b);
        assert_eq!(
            report.issues,
            vec![BuildIssue::UnresolvedDependency {
                job: "A".into(),
                missing: "X".into()
            }]
        );
        assert!(report.issues[0].to_string().contains("`X`"));
    }

    #[test]
    fn structural_errors() {
        let b = Build::new(
            vec![
                Job::new("A", "linux").with_deps(["A"]),
                Job::new("A", "mac"),
                Job::new("B", "linux").with_deps(["A", "A"]),
                Job::new("", "linux").with_run_time(-1.0),
            ],
            vec![MachineType::new("linux", 0), MachineType::new("linux", 2)],
        );
        let issues = validate_build(&b).issues;
        assert!(issues.contains(&BuildIssue::SelfDependency("A".into())));
        assert!(issues.contains(&BuildIssue::DuplicateJob("A".into())));
        assert!(issues.contains(&BuildIssue::DuplicateMachineType("linux".into())));
        assert!(issues.contains(&BuildIssue::ZeroMaxCount("linux".into())));
        assert!(issues.contains(&BuildIssue::EmptyJobName { index: 3 }));
        assert!(issues.contains(&BuildIssue::InvalidRunTime { job: "".into() }));
        assert!(issues.contains(&BuildIssue::DuplicateDependency {
            job: "B".into(),
            dep: "A".into()
        }));
        assert!(issues.contains(&BuildIssue::UnknownMachineType {
            job: "A".into(),
            machine_type: "mac".into()
        }));
    }

    #[test]
    fn longer_cycle_found_among_acyclic_jobs() {
        let b = Build::new(
            vec![
                Job::new("root", "linux"),
                Job::new("x", "linux").with_deps(["root", "z"]),
                Job::new("y", "linux").with_deps(["x"]),
                Job::new("z", "linux").with_deps(["y"]),
                Job::new("leaf", "linux").with_deps(["z"]),
            ],
            types(),
        );
        let inst = Instance::new(b).unwrap();
        assert!(!inst.is_acyclic());
        let mut c = inst.find_cycle().unwrap();
        c.sort();
        assert_eq!(c, vec!["x", "y", "z"]);
    }

    #[test]
    fn decode_examples() {
        let t = types();
        let dec = |s: &str| MachineBits::from_strings(&[s]).unwrap().decode(&t).unwrap();
        assert_eq!(dec("101").counts, vec![5]);
        assert_eq!(dec("111").counts, vec![5]);
        assert_eq!(dec("000").counts, vec![1]);
        let err = MachineBits::from_strings(&["10"]).unwrap().decode(&t);
        assert!(matches!(err, Err(Error::Layout(_))));
    }

    #[test]
    fn encode_examples() {
        let t = vec![MachineType::new("linux", 7)];
        let bits = MachineBits::encode(&MachineAllocation::new(vec![3]), &t).unwrap();
        assert_eq!(bits.to_strings(), vec!["011"]);

        let t1 = vec![MachineType::new("suse", 1)];
        let bits = MachineBits::encode(&MachineAllocation::new(vec![1]), &t1).unwrap();
        assert_eq!(bits.to_strings(), vec!["1"]);

        let err = MachineBits::encode(&MachineAllocation::new(vec![0]), &t1);
        assert!(matches!(err, Err(Error::CountOutOfRange { .. })));
    }

    #[test]
    fn widths() {
        assert_eq!(segment_width(1), 1);
        assert_eq!(segment_width(2), 2);
        assert_eq!(segment_width(3), 2);
        assert_eq!(segment_width(4), 3);
        assert_eq!(segment_width(5), 3);
        assert_eq!(segment_width(8), 4);
    }

    #[test]
    fn enumerate_allocations() {
        let t = vec![MachineType::new("a", 2), MachineType::new("b", 3)];
        let all = MachineAllocation::enumerate(&t);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0].counts, vec![1, 1]);
        assert_eq!(all[5].counts, vec![2, 3]);
    }

    #[test]
    fn resolve_priority_rejects_non_permutation() {
        let b = Build::new(
            vec![Job::new("A", "linux"), Job::new("B", "linux")],
            types(),
        );
        let inst = Instance::new(b).unwrap();
        assert_eq!(inst.resolve_priority(&["B", "A"]).unwrap(), vec![1, 0]);
        assert!(inst.resolve_priority(&["A", "A"]).is_err());
        assert!(inst.resolve_priority(&["A"]).is_err());
        assert!(inst.resolve_priority(&["A", "Q"]).is_err());
    }
}
