//! Recursive-descent parser and name resolution.
//!
//! Parsing runs in two phases: declarations are first collected into raw
//! syntax records (with panic-mode recovery to the next top-level keyword on
//! error), then resolved into a [`Model`]. Dimensional consistency between
//! tilers, arrays, and repetition spaces is deliberately left to
//! [`crate::ir::validate`]; the parser only guarantees that names resolve
//! and value-level constraints (positive extents, sane device limits) hold.

use std::collections::HashMap;
use std::path::Path;

use super::lexer::{Keyword, Token, TokenKind};
use super::{Diagnostic, Severity, SourceSpan};
use crate::builtins;
use crate::ir::{
    Direction, MemoryRegion, Model, ModelBuilder, Port, PortBinding, RepetitiveTask, ScalarType,
    Shape, Tiler,
};

struct RawArray {
    name: String,
    name_span: SourceSpan,
    element: ScalarType,
    extents: Vec<i64>,
    extents_span: SourceSpan,
}

struct RawTiling {
    direction: Direction,
    port: String,
    array: String,
    array_span: SourceSpan,
    origin: Vec<i64>,
    paving: Vec<Vec<i64>>,
    fitting: Vec<Vec<i64>>,
    pattern: Vec<i64>,
    pattern_span: SourceSpan,
}

struct RawTask {
    name: String,
    name_span: SourceSpan,
    repeat: Vec<i64>,
    repeat_span: SourceSpan,
    body: String,
    body_span: SourceSpan,
    tilings: Vec<RawTiling>,
}

struct RawMemory {
    name: String,
    name_span: SourceSpan,
    region: MemoryRegion,
}

struct RawProcessor {
    name: String,
    name_span: SourceSpan,
    device: bool,
    memories: Vec<RawMemory>,
    maxwg: Option<(i64, SourceSpan)>,
    maxdims: Option<(i64, SourceSpan)>,
}

struct RawAllocate {
    subject: String,
    subject_span: SourceSpan,
    target: String,
    target_span: SourceSpan,
}

struct RawConnect {
    from: String,
    from_span: SourceSpan,
    to: String,
    to_span: SourceSpan,
}

#[derive(Default)]
struct RawModel {
    arrays: Vec<RawArray>,
    tasks: Vec<RawTask>,
    processors: Vec<RawProcessor>,
    allocates: Vec<RawAllocate>,
    connects: Vec<RawConnect>,
}

pub(super) fn parse_tokens(
    file: &str,
    tokens: Vec<Token>,
    diags: &mut Vec<Diagnostic>,
) -> Option<Model> {
    let mut parser = Parser {
        tokens,
        pos: 0,
        diags,
    };
    let raw = parser.parse_model();
    if parser.diags.iter().any(|d| d.severity == Severity::Error) {
        return None;
    }
    resolve(file, raw, parser.diags)
}

struct Parser<'d> {
    tokens: Vec<Token>,
    pos: usize,
    diags: &'d mut Vec<Diagnostic>,
}

/// Raised internally after a syntax diagnostic; triggers recovery.
struct SyntaxError;

type PResult<T> = Result<T, SyntaxError>;

impl<'d> Parser<'d> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        matches!(self.peek().kind, TokenKind::Kw(k) if k == kw)
    }

    fn error(&mut self, span: SourceSpan, code: &'static str, message: String) {
        self.diags.push(Diagnostic {
            severity: Severity::Error,
            span,
            code,
            message,
        });
    }

    fn syntax_error(&mut self, expected: &str) -> SyntaxError {
        let tok = self.peek().clone();
        self.error(
            tok.span,
            "E0002",
            format!("expected {expected}, found {}", tok.kind),
        );
        SyntaxError
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<SourceSpan> {
        if self.at_kw(kw) {
            Ok(self.advance().span)
        } else {
            Err(self.syntax_error(&format!("`{}`", kw.as_str())))
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<SourceSpan> {
        if self.at(&kind) {
            Ok(self.advance().span)
        } else {
            Err(self.syntax_error(what))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match &self.peek().kind {
            TokenKind::Ident(_) => {
                let tok = self.advance();
                let TokenKind::Ident(name) = tok.kind else {
                    unreachable!()
                };
                Ok((name, tok.span))
            }
            _ => Err(self.syntax_error(what)),
        }
    }

    fn expect_int(&mut self, what: &str) -> PResult<(i64, SourceSpan)> {
        match self.peek().kind {
            TokenKind::Int(v) => {
                let span = self.advance().span;
                Ok((v, span))
            }
            _ => Err(self.syntax_error(what)),
        }
    }

    /// `[` INT (`,` INT)* `]` — returns the values and the span of `[`.
    fn parse_ivec(&mut self) -> PResult<(Vec<i64>, SourceSpan)> {
        let open = self.expect(TokenKind::LBracket, "`[`")?;
        let mut values = vec![self.expect_int("an integer")?.0];
        while self.at(&TokenKind::Comma) {
            self.advance();
            values.push(self.expect_int("an integer")?.0);
        }
        self.expect(TokenKind::RBracket, "`]` or `,`")?;
        Ok((values, open))
    }

    /// `[` ivec (`,` ivec)* `]`
    fn parse_imat(&mut self) -> PResult<Vec<Vec<i64>>> {
        self.expect(TokenKind::LBracket, "`[`")?;
        let mut rows = vec![self.parse_ivec()?.0];
        while self.at(&TokenKind::Comma) {
            self.advance();
            rows.push(self.parse_ivec()?.0);
        }
        self.expect(TokenKind::RBracket, "`]` or `,`")?;
        Ok(rows)
    }

    /// Skip to the next top-level declaration keyword, tracking brace depth
    /// so keywords inside `{ ... }` bodies do not stop the recovery early.
    fn synchronize(&mut self) {
        let mut depth = 0usize;
        loop {
            match &self.peek().kind {
                TokenKind::Eof => return,
                TokenKind::LBrace => {
                    depth += 1;
                    self.advance();
                }
                TokenKind::RBrace => {
                    depth = depth.saturating_sub(1);
                    self.advance();
                }
                TokenKind::Kw(
                    Keyword::Array
                    | Keyword::Task
                    | Keyword::Host
                    | Keyword::Device
                    | Keyword::Allocate
                    | Keyword::Connect,
                ) if depth == 0 => return,
                _ => {
                    self.advance();
                }
            }
        }
    }

    fn parse_model(&mut self) -> RawModel {
        let mut raw = RawModel::default();
        if matches!(self.peek().kind, TokenKind::Eof) {
            let span = self.peek().span.clone();
            self.error(
                span,
                "E0002",
                "expected model declaration (array, task, host, device, allocate, or connect)"
                    .to_string(),
            );
            return raw;
        }
        while !matches!(self.peek().kind, TokenKind::Eof) {
            let result = match self.peek().kind {
                TokenKind::Kw(Keyword::Array) => self.parse_array(&mut raw),
                TokenKind::Kw(Keyword::Task) => self.parse_task(&mut raw),
                TokenKind::Kw(Keyword::Host) => self.parse_host(&mut raw),
                TokenKind::Kw(Keyword::Device) => self.parse_device(&mut raw),
                TokenKind::Kw(Keyword::Allocate) => self.parse_allocate(&mut raw),
                TokenKind::Kw(Keyword::Connect) => self.parse_connect(&mut raw),
                _ => Err(self.syntax_error(
                    "a declaration (array, task, host, device, allocate, or connect)",
                )),
            };
            if result.is_err() {
                // Consume at least one token so recovery always progresses.
                if !matches!(self.peek().kind, TokenKind::Eof) {
                    self.advance();
                }
                self.synchronize();
            }
        }
        raw
    }

    fn parse_array(&mut self, raw: &mut RawModel) -> PResult<()> {
        self.expect_kw(Keyword::Array)?;
        let (name, name_span) = self.expect_ident("an array name")?;
        self.expect(TokenKind::Colon, "`:`")?;
        let (ty_name, ty_span) = self.expect_ident("an element type (u8, i32, or f32)")?;
        let element = match ty_name.as_str() {
            "u8" => ScalarType::U8,
            "i32" => ScalarType::I32,
            "f32" => ScalarType::F32,
            other => {
                self.error(
                    ty_span,
                    "E0002",
                    format!("unknown element type `{other}` (expected u8, i32, or f32)"),
                );
                return Err(SyntaxError);
            }
        };
        let (extents, extents_span) = self.parse_ivec()?;
        raw.arrays.push(RawArray {
            name,
            name_span,
            element,
            extents,
            extents_span,
        });
        Ok(())
    }

    fn parse_task(&mut self, raw: &mut RawModel) -> PResult<()> {
        self.expect_kw(Keyword::Task)?;
        let (name, name_span) = self.expect_ident("a task name")?;
        self.expect_kw(Keyword::Repeat)?;
        let (repeat, repeat_span) = self.parse_ivec()?;
        self.expect_kw(Keyword::Body)?;
        let (body, body_span) = self.expect_ident("an elementary body name")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut tilings = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            let direction = if self.at_kw(Keyword::In) {
                Direction::In
            } else if self.at_kw(Keyword::Out) {
                Direction::Out
            } else {
                return Err(self.syntax_error("`in`, `out`, or `}`"));
            };
            self.advance();
            let (port, _) = self.expect_ident("a port name")?;
            self.expect_kw(Keyword::From)?;
            let (array, array_span) = self.expect_ident("an array name")?;
            self.expect_kw(Keyword::Tiler)?;
            self.expect(TokenKind::LBrace, "`{`")?;
            self.expect_kw(Keyword::Origin)?;
            let (origin, _) = self.parse_ivec()?;
            self.expect_kw(Keyword::Paving)?;
            let paving = self.parse_imat()?;
            self.expect_kw(Keyword::Fitting)?;
            let fitting = self.parse_imat()?;
            self.expect_kw(Keyword::Pattern)?;
            let (pattern, pattern_span) = self.parse_ivec()?;
            self.expect(TokenKind::RBrace, "`}`")?;
            tilings.push(RawTiling {
                direction,
                port,
                array,
                array_span,
                origin,
                paving,
                fitting,
                pattern,
                pattern_span,
            });
        }
        self.expect(TokenKind::RBrace, "`}`")?;
        raw.tasks.push(RawTask {
            name,
            name_span,
            repeat,
            repeat_span,
            body,
            body_span,
            tilings,
        });
        Ok(())
    }

    fn parse_host(&mut self, raw: &mut RawModel) -> PResult<()> {
        self.expect_kw(Keyword::Host)?;
        let (name, name_span) = self.expect_ident("a host name")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        self.expect_kw(Keyword::Memory)?;
        let (mem_name, mem_span) = self.expect_ident("a memory name")?;
        self.expect(TokenKind::RBrace, "`}`")?;
        raw.processors.push(RawProcessor {
            name,
            name_span,
            device: false,
            memories: vec![RawMemory {
                name: mem_name,
                name_span: mem_span,
                region: MemoryRegion::HostRam,
            }],
            maxwg: None,
            maxdims: None,
        });
        Ok(())
    }

    fn parse_device(&mut self, raw: &mut RawModel) -> PResult<()> {
        self.expect_kw(Keyword::Device)?;
        let (name, name_span) = self.expect_ident("a device name")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut memories = Vec::new();
        while self.at_kw(Keyword::Memory) {
            self.advance();
            let (mem_name, mem_span) = self.expect_ident("a memory name")?;
            self.expect_kw(Keyword::Kind)?;
            let (region_name, region_span) =
                self.expect_ident("a memory region (global, constant, local, or private)")?;
            let region = match region_name.as_str() {
                "global" => MemoryRegion::DeviceGlobal,
                "constant" => MemoryRegion::DeviceConstant,
                "local" => MemoryRegion::DeviceLocal,
                "private" => MemoryRegion::DevicePrivate,
                other => {
                    self.error(
                        region_span,
                        "E0002",
                        format!(
                            "unknown memory region `{other}` (expected global, constant, local, or private)"
                        ),
                    );
                    return Err(SyntaxError);
                }
            };
            memories.push(RawMemory {
                name: mem_name,
                name_span: mem_span,
                region,
            });
        }
        if memories.is_empty() {
            return Err(self.syntax_error("`memory`"));
        }
        self.expect_kw(Keyword::MaxWg)?;
        let maxwg = self.expect_int("a work-group size")?;
        let maxdims = if self.at_kw(Keyword::MaxDims) {
            self.advance();
            Some(self.expect_int("a dimension count")?)
        } else {
            None
        };
        self.expect(TokenKind::RBrace, "`}`")?;
        raw.processors.push(RawProcessor {
            name,
            name_span,
            device: true,
            memories,
            maxwg: Some(maxwg),
            maxdims,
        });
        Ok(())
    }

    fn parse_allocate(&mut self, raw: &mut RawModel) -> PResult<()> {
        self.expect_kw(Keyword::Allocate)?;
        let (subject, subject_span) = self.expect_ident("a task or array name")?;
        self.expect_kw(Keyword::On)?;
        let (target, target_span) = self.expect_ident("a processor or memory name")?;
        raw.allocates.push(RawAllocate {
            subject,
            subject_span,
            target,
            target_span,
        });
        Ok(())
    }

    fn parse_connect(&mut self, raw: &mut RawModel) -> PResult<()> {
        self.expect_kw(Keyword::Connect)?;
        let (from, from_span) = self.expect_ident("a task name")?;
        self.expect(TokenKind::Arrow, "`->`")?;
        let (to, to_span) = self.expect_ident("a task name")?;
        raw.connects.push(RawConnect {
            from,
            from_span,
            to,
            to_span,
        });
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq)]
enum ElementKind {
    Array(usize),
    Task(usize),
}

#[derive(Clone, Copy, PartialEq)]
enum HwKind {
    Processor(usize),
    Memory(usize),
}

struct Resolver<'d> {
    diags: &'d mut Vec<Diagnostic>,
}

impl<'d> Resolver<'d> {
    fn error(&mut self, span: &SourceSpan, code: &'static str, message: String) {
        self.diags.push(Diagnostic {
            severity: Severity::Error,
            span: span.clone(),
            code,
            message,
        });
    }

    fn shape(&mut self, extents: &[i64], span: &SourceSpan, what: &str) -> Option<Shape> {
        if let Some(&bad) = extents.iter().find(|&&e| e <= 0) {
            self.error(
                span,
                "E0006",
                format!("{what} extents must be positive, got {bad}"),
            );
            return None;
        }
        match Shape::new(extents.iter().map(|&e| e as usize).collect::<Vec<_>>()) {
            Ok(shape) => Some(shape),
            Err(e) => {
                self.error(span, "E0006", format!("{what}: {e}"));
                None
            }
        }
    }
}

fn resolve(file: &str, raw: RawModel, diags: &mut Vec<Diagnostic>) -> Option<Model> {
    let mut r = Resolver { diags };
    let model_name = Path::new(file)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("model")
        .to_string();
    let mut builder = ModelBuilder::new(model_name);

    // Name tables. Tasks and arrays share a namespace, as do processors and
    // memories, because `allocate` and `connect` refer to them by bare name.
    let mut elements: HashMap<&str, (ElementKind, &SourceSpan)> = HashMap::new();
    let mut hw: HashMap<&str, (HwKind, &SourceSpan)> = HashMap::new();

    for (i, a) in raw.arrays.iter().enumerate() {
        if let Some((_, first)) = elements.get(a.name.as_str()) {
            let first_line = first.line;
            r.error(
                &a.name_span,
                "E0003",
                format!(
                    "duplicate identifier `{}` (first declared on line {first_line})",
                    a.name
                ),
            );
        } else {
            elements.insert(&a.name, (ElementKind::Array(i), &a.name_span));
        }
    }
    for (i, t) in raw.tasks.iter().enumerate() {
        if let Some((_, first)) = elements.get(t.name.as_str()) {
            let first_line = first.line;
            r.error(
                &t.name_span,
                "E0003",
                format!(
                    "duplicate identifier `{}` (first declared on line {first_line})",
                    t.name
                ),
            );
        } else {
            elements.insert(&t.name, (ElementKind::Task(i), &t.name_span));
        }
    }
    let mut mem_lookup: Vec<(usize, usize)> = Vec::new(); // (processor idx, memory idx within)
    for (i, p) in raw.processors.iter().enumerate() {
        if let Some((_, first)) = hw.get(p.name.as_str()) {
            let first_line = first.line;
            r.error(
                &p.name_span,
                "E0003",
                format!(
                    "duplicate identifier `{}` (first declared on line {first_line})",
                    p.name
                ),
            );
        } else {
            hw.insert(&p.name, (HwKind::Processor(i), &p.name_span));
        }
        for (j, m) in p.memories.iter().enumerate() {
            if let Some((_, first)) = hw.get(m.name.as_str()) {
                let first_line = first.line;
                r.error(
                    &m.name_span,
                    "E0003",
                    format!(
                        "duplicate identifier `{}` (first declared on line {first_line})",
                        m.name
                    ),
                );
            } else {
                hw.insert(&m.name, (HwKind::Memory(mem_lookup.len()), &m.name_span));
                mem_lookup.push((i, j));
            }
        }
    }

    // Architecture first: memories need their owners.
    let mut proc_ids = Vec::new();
    for p in &raw.processors {
        let id = if p.device {
            let (maxwg, maxwg_span) = p.maxwg.as_ref().expect("device always parses maxwg");
            if *maxwg <= 0 {
                r.error(
                    maxwg_span,
                    "E0006",
                    format!("device max work-group size must be positive, got {maxwg}"),
                );
            }
            let maxdims = match &p.maxdims {
                Some((d, span)) => {
                    if !(1..=3).contains(d) {
                        r.error(
                            span,
                            "E0006",
                            format!("device NDRange dimensions must be 1 to 3, got {d}"),
                        );
                        3
                    } else {
                        *d as usize
                    }
                }
                None => 3,
            };
            builder.device_with_dims(&p.name, (*maxwg).max(1) as u64, maxdims)
        } else {
            builder.host(&p.name)
        };
        proc_ids.push(id);
    }
    let mut mem_ids = Vec::new();
    for &(pi, mi) in &mem_lookup {
        let m = &raw.processors[pi].memories[mi];
        mem_ids.push(builder.memory(&m.name, m.region, proc_ids[pi]));
    }

    let mut array_ids = Vec::new();
    for a in &raw.arrays {
        let shape = r
            .shape(&a.extents, &a.extents_span, "array")
            .unwrap_or_else(|| Shape::new(vec![1]).unwrap());
        array_ids.push(builder.array(&a.name, a.element, shape));
    }

    let mut task_ids = Vec::new();
    for t in &raw.tasks {
        let repetition_space = r
            .shape(&t.repeat, &t.repeat_span, "repetition space")
            .unwrap_or_else(|| Shape::new(vec![1]).unwrap());
        if builtins::lookup(&t.body).is_none() {
            r.error(
                &t.body_span,
                "E0004",
                format!("unresolved reference to elementary body `{}`", t.body),
            );
        }
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for tiling in &t.tilings {
            let Some(&(kind, _)) = elements.get(tiling.array.as_str()) else {
                r.error(
                    &tiling.array_span,
                    "E0004",
                    format!("unresolved reference to array `{}`", tiling.array),
                );
                continue;
            };
            let ElementKind::Array(ai) = kind else {
                r.error(
                    &tiling.array_span,
                    "E0004",
                    format!("`{}` is a task, expected an array", tiling.array),
                );
                continue;
            };
            let pattern_shape = r
                .shape(&tiling.pattern, &tiling.pattern_span, "pattern")
                .unwrap_or_else(|| Shape::new(vec![1]).unwrap());
            let binding = PortBinding {
                port: Port {
                    name: tiling.port.clone(),
                    direction: tiling.direction,
                    element: raw.arrays[ai].element,
                    pattern_shape: pattern_shape.clone(),
                },
                tiler: Tiler {
                    origin: tiling.origin.clone(),
                    paving: tiling.paving.clone(),
                    fitting: tiling.fitting.clone(),
                    array: array_ids[ai],
                    pattern_shape,
                },
            };
            match tiling.direction {
                Direction::In => inputs.push(binding),
                _ => outputs.push(binding),
            }
        }
        task_ids.push(builder.task(RepetitiveTask {
            name: t.name.clone(),
            repetition_space,
            body: t.body.clone(),
            inputs,
            outputs,
        }));
    }

    // Allocations.
    let mut task_allocated = vec![false; raw.tasks.len()];
    let mut array_allocated = vec![false; raw.arrays.len()];
    for alloc in &raw.allocates {
        let Some(&(subject, _)) = elements.get(alloc.subject.as_str()) else {
            r.error(
                &alloc.subject_span,
                "E0004",
                format!("unresolved reference to `{}`", alloc.subject),
            );
            continue;
        };
        let Some(&(target, _)) = hw.get(alloc.target.as_str()) else {
            r.error(
                &alloc.target_span,
                "E0004",
                format!("unresolved reference to `{}`", alloc.target),
            );
            continue;
        };
        match (subject, target) {
            (ElementKind::Task(ti), HwKind::Processor(pi)) => {
                if std::mem::replace(&mut task_allocated[ti], true) {
                    r.error(
                        &alloc.subject_span,
                        "E0008",
                        format!("task `{}` is allocated more than once", alloc.subject),
                    );
                } else {
                    builder.allocate_task(task_ids[ti], proc_ids[pi]);
                }
            }
            (ElementKind::Array(ai), HwKind::Memory(mi)) => {
                if std::mem::replace(&mut array_allocated[ai], true) {
                    r.error(
                        &alloc.subject_span,
                        "E0008",
                        format!("array `{}` is allocated more than once", alloc.subject),
                    );
                } else {
                    builder.allocate_array(array_ids[ai], mem_ids[mi]);
                }
            }
            (ElementKind::Task(_), HwKind::Memory(_)) => {
                r.error(
                    &alloc.target_span,
                    "E0007",
                    format!(
                        "task `{}` must be allocated on a processor, `{}` is a memory",
                        alloc.subject, alloc.target
                    ),
                );
            }
            (ElementKind::Array(_), HwKind::Processor(_)) => {
                r.error(
                    &alloc.target_span,
                    "E0007",
                    format!(
                        "array `{}` must be allocated on a memory, `{}` is a processor",
                        alloc.subject, alloc.target
                    ),
                );
            }
        }
    }
    for (ti, allocated) in task_allocated.iter().enumerate() {
        if !allocated {
            r.error(
                &raw.tasks[ti].name_span,
                "E0009",
                format!(
                    "task `{}` is never allocated to a processor",
                    raw.tasks[ti].name
                ),
            );
        }
    }
    for (ai, allocated) in array_allocated.iter().enumerate() {
        if !allocated {
            r.error(
                &raw.arrays[ai].name_span,
                "E0009",
                format!(
                    "array `{}` is never allocated to a memory",
                    raw.arrays[ai].name
                ),
            );
        }
    }

    // Explicit ordering edges.
    for c in &raw.connects {
        let mut task_of = |name: &str, span: &SourceSpan| -> Option<usize> {
            match elements.get(name) {
                Some(&(ElementKind::Task(ti), _)) => Some(ti),
                Some(&(ElementKind::Array(_), _)) => {
                    r.error(
                        span,
                        "E0010",
                        format!("connect endpoints must name tasks, `{name}` is an array"),
                    );
                    None
                }
                None => {
                    r.error(
                        span,
                        "E0004",
                        format!("unresolved reference to task `{name}`"),
                    );
                    None
                }
            }
        };
        let from = task_of(&c.from, &c.from_span);
        let to = task_of(&c.to, &c.to_span);
        if let (Some(from), Some(to)) = (from, to) {
            builder.order(task_ids[from], task_ids[to]);
        }
    }

    if r.diags.iter().any(|d| d.severity == Severity::Error) {
        return None;
    }
    match builder.finish() {
        Ok(model) => Some(model),
        Err(e) => {
            // Unreachable given the checks above, but never panic on input.
            r.error(
                &SourceSpan {
                    file: file.to_string(),
                    line: 1,
                    col: 1,
                    len: 0,
                },
                "E0009",
                e.to_string(),
            );
            None
        }
    }
}
