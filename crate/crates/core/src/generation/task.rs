use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::oracle::{Constraint, Relation};

/// Slot in a prompt template replaced by the numeric target.
pub const VALUE_SLOT: &str = "[VALUE]";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error("task {task:?}: {reason}")]
    Invalid { task: String, reason: String },
    #[error("task registry: {0}")]
    Registry(String),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
}

/// A generation task: prompt sentences plus the constraints that define success.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    /// One sentence per constraint group, in declared order.
    pub prompt_template: Vec<String>,
    pub constraints: Vec<Constraint>,
    pub numeric_target: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Template {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraint {
    property: String,
    relation: Relation,
    #[serde(default)]
    threshold: Option<f64>,
    #[serde(default)]
    window: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    name: String,
    prompt_template: Template,
    constraints: Vec<RawConstraint>,
    #[serde(default)]
    numeric_target: Option<f64>,
}

#[derive(Serialize)]
struct TaskOut<'a> {
    name: &'a str,
    prompt_template: &'a [String],
    constraints: &'a [Constraint],
    #[serde(skip_serializing_if = "Option::is_none")]
    numeric_target: Option<f64>,
}

impl TaskSpec {
    /// Checks the task invariants and fills `within` targets from
    /// `numeric_target`.
    pub fn new(
        name: impl Into<String>,
        prompt_template: Vec<String>,
        constraints: Vec<Constraint>,
        numeric_target: Option<f64>,
    ) -> Result<TaskSpec, TaskError> {
        let task = TaskSpec {
            name: name.into(),
            prompt_template,
            constraints,
            numeric_target,
        };
        task.check()?;
        Ok(task)
    }

    fn invalid(&self, reason: impl Into<String>) -> TaskError {
        TaskError::Invalid {
            task: self.name.clone(),
            reason: reason.into(),
        }
    }

    fn check(&self) -> Result<(), TaskError> {
        if self.name.trim().is_empty() {
            return Err(self.invalid("empty name"));
        }
        if self.prompt_template.is_empty()
            || self.prompt_template.iter().any(|s| s.trim().is_empty())
        {
            return Err(self.invalid("empty prompt sentence"));
        }
        if self.constraints.is_empty() {
            return Err(self.invalid("no constraints"));
        }
        let has_slot = self.prompt_template.iter().any(|s| s.contains(VALUE_SLOT));
        match (has_slot, self.numeric_target) {
            (true, None) => return Err(self.invalid("template has [VALUE] but no numeric_target")),
            (false, Some(_)) => {
                return Err(self.invalid("numeric_target set but template has no [VALUE]"))
            }
            (_, Some(t)) if !t.is_finite() => {
                return Err(self.invalid("numeric_target is not finite"))
            }
            _ => {}
        }
        for c in &self.constraints {
            if c.property.trim().is_empty() {
                return Err(self.invalid("constraint without property"));
            }
            if !c.threshold.is_finite() {
                return Err(self.invalid(format!("{}: threshold is not finite", c.property)));
            }
            match (c.relation, c.window) {
                (Relation::Within, Some(w)) if w > 0.0 && w.is_finite() => {}
                (Relation::Within, _) => {
                    return Err(self.invalid(format!("{}: within needs window > 0", c.property)))
                }
                (_, Some(_)) => {
                    return Err(
                        self.invalid(format!("{}: window only applies to within", c.property))
                    )
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Property names in constraint order, without repeats.
    pub fn properties(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.constraints {
            if !out.contains(&c.property.as_str()) {
                out.push(&c.property);
            }
        }
        out
    }
}

impl<'de> Deserialize<'de> for TaskSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawTask::deserialize(d)?;
        let template = match raw.prompt_template {
            Template::One(s) => vec![s],
            Template::Many(v) => v,
        };
        let mut constraints = Vec::with_capacity(raw.constraints.len());
        for c in raw.constraints {
            let threshold = match (c.threshold, c.relation) {
                (Some(t), _) => t,
                (None, Relation::Within) => raw.numeric_target.ok_or_else(|| {
                    serde::de::Error::custom(format!(
                        "task {:?}: within constraint needs a target",
                        raw.name
                    ))
                })?,
                (None, _) => {
                    return Err(serde::de::Error::custom(format!(
                        "task {:?}: constraint on {} needs a threshold",
                        raw.name, c.property
                    )))
                }
            };
            constraints.push(Constraint {
                property: c.property,
                relation: c.relation,
                threshold,
                window: c.window,
            });
        }
        TaskSpec::new(raw.name, template, constraints, raw.numeric_target)
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for TaskSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TaskOut {
            name: &self.name,
            prompt_template: &self.prompt_template,
            constraints: &self.constraints,
            numeric_target: self.numeric_target,
        }
        .serialize(s)
    }
}

/// Ordered collection of tasks with unique names.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TaskRegistry {
    tasks: Vec<TaskSpec>,
}

const BUILTIN_REGISTRY: &str = include_str!("../../tasks/registry.json");

impl TaskRegistry {
    pub fn from_tasks(tasks: Vec<TaskSpec>) -> Result<TaskRegistry, TaskError> {
        for (i, t) in tasks.iter().enumerate() {
            if tasks[..i].iter().any(|o| o.name == t.name) {
                return Err(TaskError::Registry(format!(
                    "duplicate task name {:?}",
                    t.name
                )));
            }
        }
        Ok(TaskRegistry { tasks })
    }

    /// Parses a registry: a JSON array of tasks.
    pub fn from_json(text: &str) -> Result<TaskRegistry, TaskError> {
        let tasks: Vec<TaskSpec> =
            serde_json::from_str(text).map_err(|e| TaskError::Registry(e.to_string()))?;
        TaskRegistry::from_tasks(tasks)
    }

    /// Tasks shipped with the crate: the property tasks, the activity tasks,
    /// the two-constraint tasks and offline tasks scored by built-in oracles.
    pub fn builtin() -> TaskRegistry {
        TaskRegistry::from_json(BUILTIN_REGISTRY).expect("bundled registry is valid")
    }

    pub fn get(&self, name: &str) -> Result<&TaskSpec, TaskError> {
        self.tasks
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| TaskError::UnknownTask(name.to_string()))
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tasks.iter().map(|t| t.name.as_str())
    }

    /// Adds or replaces tasks by name.
    pub fn merge(&mut self, other: TaskRegistry) {
        for t in other.tasks {
            match self.tasks.iter_mut().find(|o| o.name == t.name) {
                Some(slot) => *slot = t,
                None => self.tasks.push(t),
            }
        }
    }
}
