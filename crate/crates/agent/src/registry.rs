use std::collections::HashMap;
use std::sync::Arc;

use clinseek_core::names;
use clinseek_core::{AnswerSchema, Arguments, ErrorCode, TaskInstance, ToolFailure, ToolOutput, ToolSchema};
use clinseek_ehr::{EhrCaps, EhrSession, EhrStore, FinishOutcome, SimilarityBackend, TrigramCosine};
use clinseek_imaging::{ImagingClient, ImagingTools};
use clinseek_knowledge::{KnowledgeBackend, KnowledgeTools};

/// A group of tools executed on behalf of one episode.
pub trait ToolHandler: Send {
    fn schemas(&self) -> Vec<ToolSchema>;

    fn call(&mut self, name: &str, args: &Arguments) -> ToolOutput;
}

impl ToolHandler for EhrSession {
    fn schemas(&self) -> Vec<ToolSchema> {
        clinseek_ehr::tool_schemas()
    }

    fn call(&mut self, name: &str, args: &Arguments) -> ToolOutput {
        EhrSession::call(self, name, args)
    }
}

impl ToolHandler for KnowledgeTools {
    fn schemas(&self) -> Vec<ToolSchema> {
        clinseek_knowledge::tool_schemas()
    }

    fn call(&mut self, name: &str, args: &Arguments) -> ToolOutput {
        KnowledgeTools::call(self, name, args)
    }
}

impl ToolHandler for ImagingTools {
    fn schemas(&self) -> Vec<ToolSchema> {
        clinseek_imaging::tool_schemas()
    }

    fn call(&mut self, name: &str, args: &Arguments) -> ToolOutput {
        ImagingTools::call(self, name, args)
    }
}

/// The tools offered to one episode. `ehr.finish` is always offered and is
/// handled here rather than by a handler.
pub struct Registry {
    answer_schema: AnswerSchema,
    schemas: Vec<ToolSchema>,
    routes: HashMap<String, usize>,
    handlers: Vec<Box<dyn ToolHandler>>,
}

impl Registry {
    pub fn new(answer_schema: AnswerSchema) -> Self {
        let finish = clinseek_ehr::tool_schemas()
            .into_iter()
            .find(|s| s.name == names::FINISH)
            .expect("finish schema exists");
        Self {
            answer_schema,
            schemas: vec![finish],
            routes: HashMap::new(),
            handlers: Vec::new(),
        }
    }

    /// Adds a handler; names it shares with earlier handlers are ignored.
    pub fn with(mut self, handler: Box<dyn ToolHandler>) -> Self {
        let idx = self.handlers.len();
        for schema in handler.schemas() {
            if self.routes.contains_key(&schema.name) || schema.name == names::FINISH {
                continue;
            }
            self.routes.insert(schema.name.clone(), idx);
            self.schemas.push(schema);
        }
        self.handlers.push(handler);
        self
    }

    /// Schemas in a stable order: EHR, browser, image, then anything else.
    pub fn schemas(&self) -> Vec<ToolSchema> {
        let order = |name: &str| {
            names::all()
                .position(|n| n == name)
                .unwrap_or(usize::MAX)
        };
        let mut out = self.schemas.clone();
        out.sort_by_key(|s| order(&s.name));
        out
    }

    pub fn offers(&self, name: &str) -> bool {
        name == names::FINISH || self.routes.contains_key(name)
    }

    pub fn call(&mut self, name: &str, args: &Arguments) -> ToolOutput {
        if name == names::FINISH {
            return self.finish(args).map(|o| o.render());
        }
        match self.routes.get(name) {
            Some(&i) => self.handlers[i].call(name, args),
            None => Err(ToolFailure::new(
                ErrorCode::UnknownTool,
                format!("tool {name:?} is not available in this episode"),
            )),
        }
    }

    pub fn finish(&self, args: &Arguments) -> Result<FinishOutcome, ToolFailure> {
        let schema = &self.schemas[0];
        schema
            .check_arguments(args)
            .map_err(|m| ToolFailure::new(ErrorCode::InvalidArguments, m))?;
        let answers: Vec<String> = args["answers"]
            .as_array()
            .expect("checked string list")
            .iter()
            .map(|v| v.as_str().expect("checked string list").to_string())
            .collect();
        Ok(clinseek_ehr::tools::finish(&answers, &self.answer_schema))
    }
}

/// Shared, immutable backends from which per-episode registries are built.
#[derive(Clone)]
pub struct Toolkit {
    pub store: Arc<EhrStore>,
    pub knowledge: Arc<dyn KnowledgeBackend>,
    pub imaging: ImagingClient,
    pub ehr_caps: EhrCaps,
    pub similarity: Arc<dyn SimilarityBackend>,
}

impl Toolkit {
    pub fn new(store: Arc<EhrStore>, knowledge: Arc<dyn KnowledgeBackend>, imaging: ImagingClient) -> Self {
        Self {
            store,
            knowledge,
            imaging,
            ehr_caps: EhrCaps::default(),
            similarity: Arc::new(TrigramCosine),
        }
    }

    /// EHR and browser tools always; image tools iff the task has images.
    pub fn registry(&self, task: &TaskInstance) -> Registry {
        let ehr = EhrSession::with(
            self.store.clone(),
            task.clone(),
            self.ehr_caps,
            self.similarity.clone(),
        );
        let mut r = Registry::new(task.answer_schema.clone())
            .with(Box::new(ehr))
            .with(Box::new(KnowledgeTools::new(self.knowledge.clone())));
        if task.has_images() {
            r = r.with(Box::new(ImagingTools::new(
                self.imaging.clone(),
                task.modality_meta.clone(),
            )));
        }
        r
    }

    /// The curated setting: only `ehr.finish`.
    pub fn curated_registry(&self, task: &TaskInstance) -> Registry {
        Registry::new(task.answer_schema.clone())
    }
}

/// Schemas an agentic episode for `task` is offered, in canonical order.
pub fn tool_schemas_for(task: &TaskInstance) -> Vec<ToolSchema> {
    let mut out = clinseek_ehr::tool_schemas();
    out.extend(clinseek_knowledge::tool_schemas());
    if task.has_images() {
        out.extend(clinseek_imaging::tool_schemas());
    }
    out
}
