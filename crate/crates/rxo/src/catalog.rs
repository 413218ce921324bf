//! System catalogue: class specifications, flattened interfaces under
//! multiple inheritance, realizations, and the permanent name tables that
//! bind source names to relational structures.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::kernel::Kind;
use crate::parser::ast::{
    CreateClass, MemberBody, MemberDecl, RealizeBody, SelectStmt, Stmt, TypeName,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("class `{0}` is already defined")]
    DuplicateClass(String),
    #[error("unknown parent class `{0}`")]
    UnknownParent(String),
    #[error("member `{0}` collides in the flattened interface")]
    MemberCollision(String),
    #[error("cyclic inheritance involving `{0}`")]
    CyclicInheritance(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("member `{0}` is declared independently by two parents")]
    AmbiguousMember(String),
    #[error("class `{class}` has no member `{member}`")]
    UnknownMember { class: String, member: String },
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("replacing the stored realization of `{class}.{member}` would lose data")]
    StoredDataLoss { class: String, member: String },
    #[error("`{class}.{member}` is already realized as stored")]
    AlreadyStored { class: String, member: String },
    #[error("`{class}.{member}` is not realized as stored")]
    NotStored { class: String, member: String },
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("`{0}` is a scalar and cannot be traversed")]
    NotTraversable(String),
    #[error("invalid class declaration: {0}")]
    InvalidClass(String),
}

/// The kind of a data component (or of a nested attribute).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComponentKind {
    Scalar(Kind),
    Reference(String),
    SetOf(SetOfShape),
}

impl ComponentKind {
    /// The scalar kind a stored attribute of this component carries.
    pub fn attribute_kind(&self) -> Option<Kind> {
        match self {
            ComponentKind::Scalar(kind) => Some(kind.clone()),
            ComponentKind::Reference(class) => Some(Kind::Ref(class.clone())),
            ComponentKind::SetOf(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetOfShape {
    pub attrs: Vec<(String, ComponentKind)>,
    pub key: Vec<String>,
}

impl SetOfShape {
    pub fn attr(&self, name: &str) -> Option<&ComponentKind> {
        self.attrs.iter().find(|(n, _)| n == name).map(|(_, k)| k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MemberKind {
    Component(ComponentKind),
    Method { params: Vec<(String, Kind)>, ret: Option<Kind> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberSpec {
    pub name: String,
    pub kind: MemberKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefConstraint {
    pub component: String,
    pub local_attrs: Vec<String>,
    pub target_class: String,
    pub target_attrs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSpec {
    pub name: String,
    pub parents: Vec<String>,
    pub members: Vec<MemberSpec>,
    pub class_key: Option<Vec<String>>,
    pub references: Vec<RefConstraint>,
}

/// A member as seen through the flattened interface: `origin` is the class
/// that originally declared it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedMember {
    pub name: String,
    pub origin: String,
    pub kind: MemberKind,
}

/// Component or method implementation. Exactly one is active per
/// (class, member) after inheritance resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum Realization {
    Stored,
    Query(SelectStmt),
    Procedure { params: Vec<(String, Kind)>, body: Vec<Stmt> },
}

/// Storage binding of one set-of component (possibly nested).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChildStorage {
    pub relation: String,
    /// Enclosing set-of member path for nested components.
    pub parent: Option<String>,
    /// Attributes linking a row to its object (`#oid`, then enclosing keys).
    pub link_attrs: Vec<String>,
    /// Own attribute names in declared order (scalars and references only).
    pub attrs: Vec<String>,
}

/// Name-table entry for one class: where its stored members live.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassStorage {
    pub root: String,
    /// member name -> attribute name in the root relation
    pub columns: BTreeMap<String, String>,
    /// member path (e.g. `Items` or `Items.Sub`) -> child relation binding
    pub children: BTreeMap<String, ChildStorage>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    classes: Vec<ClassSpec>,
    realizations: BTreeMap<(String, String), Realization>,
    storage_map: BTreeMap<String, ClassStorage>,
    /// Canonical text of every schema statement, in execution order; replaying
    /// it rebuilds classes and realizations.
    pub history: Vec<String>,
}

impl Catalog {
    pub fn new() -> Catalog {
        Catalog::default()
    }

    pub fn classes(&self) -> &[ClassSpec] {
        &self.classes
    }

    pub fn class_names(&self) -> Vec<&str> {
        self.classes.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn class(&self, name: &str) -> Result<&ClassSpec, CatalogError> {
        self.classes
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| CatalogError::UnknownClass(name.to_string()))
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.classes.iter().any(|c| c.name == name)
    }

    pub(crate) fn push_class(&mut self, spec: ClassSpec) {
        self.classes.push(spec);
    }

    /// `class` and every class that descends from it, in creation order.
    pub fn descendants_inclusive(&self, class: &str) -> Vec<String> {
        self.classes
            .iter()
            .filter(|c| self.inherits_from(&c.name, class))
            .map(|c| c.name.clone())
            .collect()
    }

    /// True when `class` is `ancestor` or transitively extends it.
    pub fn inherits_from(&self, class: &str, ancestor: &str) -> bool {
        if class == ancestor {
            return true;
        }
        match self.class(class) {
            Ok(spec) => spec.parents.iter().any(|p| self.inherits_from(p, ancestor)),
            Err(_) => false,
        }
    }

    /// Flattened interface: parents' members in EXTEND order, then own.
    /// A member inherited from one declaration via several parents appears
    /// once; independent same-name declarations are ambiguous.
    pub fn resolve_interface(&self, class: &str) -> Result<Vec<ResolvedMember>, CatalogError> {
        let spec = self.class(class)?;
        let mut members: Vec<ResolvedMember> = Vec::new();
        for parent in &spec.parents {
            for inherited in self.resolve_interface(parent)? {
                merge_member(&mut members, inherited)?;
            }
        }
        for own in &spec.members {
            merge_member(
                &mut members,
                ResolvedMember {
                    name: own.name.clone(),
                    origin: class.to_string(),
                    kind: own.kind.clone(),
                },
            )?;
        }
        Ok(members)
    }

    pub fn member(&self, class: &str, member: &str) -> Result<ResolvedMember, CatalogError> {
        self.resolve_interface(class)?
            .into_iter()
            .find(|m| m.name == member)
            .ok_or_else(|| CatalogError::UnknownMember {
                class: class.to_string(),
                member: member.to_string(),
            })
    }

    /// REFERENCE constraints visible on a class (own plus inherited).
    pub fn reference_constraints(&self, class: &str) -> Result<Vec<RefConstraint>, CatalogError> {
        let spec = self.class(class)?;
        let mut out = Vec::new();
        for parent in &spec.parents {
            for constraint in self.reference_constraints(parent)? {
                if !out.contains(&constraint) {
                    out.push(constraint);
                }
            }
        }
        for constraint in &spec.references {
            if !out.contains(constraint) {
                out.push(constraint.clone());
            }
        }
        Ok(out)
    }

    pub fn set_realization(&mut self, class: &str, member: &str, realization: Realization) {
        self.realizations
            .insert((class.to_string(), member.to_string()), realization);
    }

    pub fn own_realization(&self, class: &str, member: &str) -> Option<&Realization> {
        self.realizations.get(&(class.to_string(), member.to_string()))
    }

    /// The realization in effect for `(class, member)`: the class's own
    /// registration, else the first parent (in EXTEND order) that provides
    /// one. Returns the providing class alongside.
    pub fn effective_realization(
        &self,
        class: &str,
        member: &str,
    ) -> Option<(String, &Realization)> {
        if let Some(realization) = self.realizations.get(&(class.to_string(), member.to_string())) {
            return Some((class.to_string(), realization));
        }
        let spec = self.class(class).ok()?;
        for parent in &spec.parents {
            let has_member = self
                .resolve_interface(parent)
                .ok()?
                .iter()
                .any(|m| m.name == member);
            if has_member {
                if let Some(found) = self.effective_realization(parent, member) {
                    return Some(found);
                }
            }
        }
        None
    }

    pub fn storage(&self, class: &str) -> Option<&ClassStorage> {
        self.storage_map.get(class)
    }

    pub(crate) fn storage_mut(&mut self, class: &str) -> &mut ClassStorage {
        self.storage_map.entry(class.to_string()).or_default()
    }

    pub fn storage_map(&self) -> &BTreeMap<String, ClassStorage> {
        &self.storage_map
    }

    pub(crate) fn record(&mut self, statement: &Stmt) {
        self.history.push(statement.to_string());
    }
}

fn merge_member(
    members: &mut Vec<ResolvedMember>,
    incoming: ResolvedMember,
) -> Result<(), CatalogError> {
    match members.iter().find(|m| m.name == incoming.name) {
        None => {
            members.push(incoming);
            Ok(())
        }
        Some(existing) if existing.origin == incoming.origin => Ok(()),
        Some(_) => Err(CatalogError::AmbiguousMember(incoming.name)),
    }
}

// ---------------------------------------------------------------------------
// Path resolution against the name hierarchy.
// ---------------------------------------------------------------------------

/// What a path points at after a segment (and at its end).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathCursor {
    /// Objects of a class (an extent, or the targets of a reference).
    Objects(String),
    /// Rows of a set-of component; `class`/`member_path` locate the shape.
    SetRows { class: String, member_path: String, shape: SetOfShape },
    Scalar(Kind),
    Method { class: String, method: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentBinding {
    /// The segment names a class (an extent root).
    ClassRoot { class: String },
    /// The segment names a member of `class`.
    Member { class: String, member: String },
    /// The segment names an attribute inside a set-of shape.
    SetAttr { attr: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedSegment {
    pub name: String,
    pub binding: SegmentBinding,
    /// Cursor after this segment.
    pub after: PathCursor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathBinding {
    pub segments: Vec<ResolvedSegment>,
}

impl PathBinding {
    pub fn terminal(&self) -> &PathCursor {
        &self.segments.last().expect("paths are non-empty").after
    }
}

/// Resolves a path against the catalog. With a context class, the first
/// segment tries the context's members first, then falls back to class
/// names; without one it must name a class. Alias-rooted paths are resolved
/// by the query layer (they bind to FROM rows, not to the catalog).
pub fn lookup_path(
    catalog: &Catalog,
    path: &crate::parser::Path,
    context: Option<&str>,
) -> Result<PathBinding, CatalogError> {
    use crate::parser::PathRoot;

    let mut segments = Vec::with_capacity(path.segments.len());
    let first = path.segments.first().expect("paths are non-empty");

    let mut cursor = match &path.root {
        PathRoot::Alias(alias) => {
            return Err(CatalogError::UnknownName(format!(
                "#{alias}: aliases are only defined inside a query"
            )))
        }
        PathRoot::ContextDot => {
            let class = context.ok_or_else(|| {
                CatalogError::UnknownName(format!(
                    ".{}: no context for a dotted path",
                    first.name
                ))
            })?;
            let (binding, after) = step_member(catalog, class, &first.name)?;
            segments.push(ResolvedSegment { name: first.name.clone(), binding, after: after.clone() });
            after
        }
        PathRoot::Bare => {
            let context_member = context.and_then(|class| {
                catalog
                    .resolve_interface(class)
                    .ok()
                    .and_then(|ms| ms.into_iter().find(|m| m.name == first.name).map(|_| class))
            });
            let after = if let Some(class) = context_member {
                let (binding, after) = step_member(catalog, class, &first.name)?;
                segments.push(ResolvedSegment {
                    name: first.name.clone(),
                    binding,
                    after: after.clone(),
                });
                after
            } else if catalog.has_class(&first.name) {
                let after = PathCursor::Objects(first.name.clone());
                segments.push(ResolvedSegment {
                    name: first.name.clone(),
                    binding: SegmentBinding::ClassRoot { class: first.name.clone() },
                    after: after.clone(),
                });
                after
            } else {
                return Err(CatalogError::UnknownName(first.name.clone()));
            };
            after
        }
    };

    for segment in &path.segments[1..] {
        let (binding, after) = match &cursor {
            PathCursor::Objects(class) => step_member(catalog, class, &segment.name)?,
            PathCursor::SetRows { class, member_path, shape } => {
                step_set_attr(class, member_path, shape, &segment.name)?
            }
            PathCursor::Scalar(_) => {
                return Err(CatalogError::NotTraversable(segment.name.clone()))
            }
            PathCursor::Method { method, .. } => {
                return Err(CatalogError::NotTraversable(format!(
                    "{method} is a method; `{}` cannot follow it",
                    segment.name
                )))
            }
        };
        segments.push(ResolvedSegment { name: segment.name.clone(), binding, after: after.clone() });
        cursor = after;
    }
    Ok(PathBinding { segments })
}

fn step_member(
    catalog: &Catalog,
    class: &str,
    member: &str,
) -> Result<(SegmentBinding, PathCursor), CatalogError> {
    let resolved = catalog.member(class, member).map_err(|err| match err {
        CatalogError::UnknownMember { member, .. } => CatalogError::UnknownName(member),
        other => other,
    })?;
    let binding = SegmentBinding::Member { class: class.to_string(), member: member.to_string() };
    let after = match resolved.kind {
        MemberKind::Component(ComponentKind::Scalar(kind)) => PathCursor::Scalar(kind),
        MemberKind::Component(ComponentKind::Reference(target)) => PathCursor::Objects(target),
        MemberKind::Component(ComponentKind::SetOf(shape)) => PathCursor::SetRows {
            class: class.to_string(),
            member_path: member.to_string(),
            shape,
        },
        MemberKind::Method { .. } => {
            PathCursor::Method { class: class.to_string(), method: member.to_string() }
        }
    };
    Ok((binding, after))
}

fn step_set_attr(
    class: &str,
    member_path: &str,
    shape: &SetOfShape,
    attr: &str,
) -> Result<(SegmentBinding, PathCursor), CatalogError> {
    let kind = shape
        .attr(attr)
        .ok_or_else(|| CatalogError::UnknownName(attr.to_string()))?;
    let binding = SegmentBinding::SetAttr { attr: attr.to_string() };
    let after = match kind {
        ComponentKind::Scalar(kind) => PathCursor::Scalar(kind.clone()),
        ComponentKind::Reference(target) => PathCursor::Objects(target.clone()),
        ComponentKind::SetOf(inner) => PathCursor::SetRows {
            class: class.to_string(),
            member_path: format!("{member_path}.{attr}"),
            shape: inner.clone(),
        },
    };
    Ok((binding, after))
}

// ---------------------------------------------------------------------------
// Declaration lowering: AST -> catalog specification.
// ---------------------------------------------------------------------------

pub fn scalar_kind_of(type_name: &TypeName) -> Result<Kind, CatalogError> {
    match type_name {
        TypeName::String => Ok(Kind::String),
        TypeName::Integer => Ok(Kind::Integer),
        TypeName::Float => Ok(Kind::Float),
        TypeName::Datetime => Ok(Kind::Datetime),
        TypeName::Boolean => Ok(Kind::Boolean),
        TypeName::Class(name) => Ok(Kind::Ref(name.clone())),
    }
}

fn lower_component(decl: &MemberDecl) -> Result<ComponentKind, CatalogError> {
    match &decl.body {
        MemberBody::Scalar(ty) => Ok(ComponentKind::Scalar(scalar_kind_of(ty)?)),
        MemberBody::Reference(class) => Ok(ComponentKind::Reference(class.clone())),
        MemberBody::SetOf { attrs, key } => {
            let mut shape_attrs = Vec::with_capacity(attrs.len());
            for attr in attrs {
                if matches!(attr.body, MemberBody::Method { .. }) {
                    return Err(CatalogError::InvalidClass(format!(
                        "`{}`: methods are not allowed inside SET OF",
                        attr.name
                    )));
                }
                if shape_attrs.iter().any(|(n, _)| n == &attr.name) {
                    return Err(CatalogError::MemberCollision(attr.name.clone()));
                }
                shape_attrs.push((attr.name.clone(), lower_component(attr)?));
            }
            let shape = SetOfShape { attrs: shape_attrs, key: key.clone() };
            for key_attr in &shape.key {
                match shape.attr(key_attr) {
                    Some(ComponentKind::SetOf(_)) => {
                        return Err(CatalogError::InvalidClass(format!(
                            "key attribute `{key_attr}` may not be a SET OF"
                        )))
                    }
                    Some(_) => {}
                    None => {
                        return Err(CatalogError::InvalidClass(format!(
                            "key attribute `{key_attr}` is not declared in the SET OF"
                        )))
                    }
                }
            }
            // nested SET OF rows are addressed by the enclosing keys
            if shape.key.is_empty()
                && shape.attrs.iter().any(|(_, k)| matches!(k, ComponentKind::SetOf(_)))
            {
                return Err(CatalogError::InvalidClass(
                    "a SET OF containing a nested SET OF must declare a KEY".into(),
                ));
            }
            Ok(ComponentKind::SetOf(shape))
        }
        MemberBody::Method { .. } => unreachable!("methods handled by caller"),
    }
}

pub fn lower_class(decl: &CreateClass) -> Result<ClassSpec, CatalogError> {
    let mut members = Vec::with_capacity(decl.members.len());
    for member in &decl.members {
        let kind = match &member.body {
            MemberBody::Method { params, ret } => {
                let mut lowered = Vec::with_capacity(params.len());
                for (name, ty) in params {
                    lowered.push((name.clone(), scalar_kind_of(ty)?));
                }
                let ret = ret.as_ref().map(scalar_kind_of).transpose()?;
                MemberKind::Method { params: lowered, ret }
            }
            _ => MemberKind::Component(lower_component(member)?),
        };
        if members.iter().any(|m: &MemberSpec| m.name == member.name) {
            return Err(CatalogError::MemberCollision(member.name.clone()));
        }
        members.push(MemberSpec { name: member.name.clone(), kind });
    }
    Ok(ClassSpec {
        name: decl.name.clone(),
        parents: decl.parents.clone(),
        members,
        class_key: decl.class_key.clone(),
        references: decl
            .references
            .iter()
            .map(|r| RefConstraint {
                component: r.component.clone(),
                local_attrs: r.local_attrs.clone(),
                target_class: r.target_class.clone(),
                target_attrs: r.target_attrs.clone(),
            })
            .collect(),
    })
}

pub fn lower_realization_body(
    body: &RealizeBody,
    params: Option<&[(String, TypeName)]>,
) -> Result<Realization, CatalogError> {
    // positions are normalized away: two registrations of the same source
    // text are the same realization
    match body {
        RealizeBody::Stored => Ok(Realization::Stored),
        RealizeBody::Query(select) => {
            let mut select = select.clone();
            select.strip_positions();
            Ok(Realization::Query(select))
        }
        RealizeBody::Procedure(statements) => {
            let mut lowered = Vec::new();
            if let Some(params) = params {
                for (name, ty) in params {
                    lowered.push((name.clone(), scalar_kind_of(ty)?));
                }
            }
            let mut body = statements.to_vec();
            for statement in &mut body {
                statement.strip_positions();
            }
            Ok(Realization::Procedure { params: lowered, body })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_statement;

    fn class_spec(source: &str) -> ClassSpec {
        let Stmt::CreateClass(decl) = parse_statement(source).unwrap() else {
            panic!("expected CREATE CLASS")
        };
        lower_class(&decl).unwrap()
    }

    fn catalog_with(sources: &[&str]) -> Catalog {
        let mut catalog = Catalog::new();
        for source in sources {
            catalog.push_class(class_spec(source));
        }
        catalog
    }

    #[test]
    fn banks_interface_is_name_only() {
        let catalog = catalog_with(&["CREATE CLASS BANKS ( Name STRING );"]);
        let members = catalog.resolve_interface("BANKS").unwrap();
        assert_eq!(members.len(), 1);
        assert_eq!(members[0].name, "Name");
    }

    #[test]
    fn union_interface_under_multiple_inheritance() {
        let catalog = catalog_with(&[
            "CREATE CLASS DOCS ( DocN STRING, Date DATETIME, Comment STRING, Items SET OF ( Art STRING, Pieces INTEGER ) KEY(Art) ) KEY(DocN);",
            "CREATE CLASS VALUERECORDS ( Amount FLOAT );",
            "CREATE CLASS SALES EXTEND DOCS, VALUERECORDS ( SaledItems SET OF ( Art STRING, Price FLOAT, Pieces INTEGER ) KEY(Art, Price) );",
        ]);
        let names: Vec<String> = catalog
            .resolve_interface("SALES")
            .unwrap()
            .into_iter()
            .map(|m| m.name)
            .collect();
        assert_eq!(names, vec!["DocN", "Date", "Comment", "Items", "Amount", "SaledItems"]);
    }

    #[test]
    fn empty_interface_for_empty_class() {
        let catalog = catalog_with(&["CREATE CLASS X ( );"]);
        assert!(catalog.resolve_interface("X").unwrap().is_empty());
    }

    #[test]
    fn diamond_member_appears_once() {
        let catalog = catalog_with(&[
            "CREATE CLASS A ( M INTEGER );",
            "CREATE CLASS B EXTEND A ( X INTEGER );",
            "CREATE CLASS C EXTEND A ( Y INTEGER );",
            "CREATE CLASS D EXTEND B, C ( );",
        ]);
        let names: Vec<String> = catalog
            .resolve_interface("D")
            .unwrap()
            .into_iter()
            .map(|m| m.name)
            .collect();
        assert_eq!(names, vec!["M", "X", "Y"]);
    }

    #[test]
    fn independent_declarations_are_ambiguous() {
        let catalog = catalog_with(&[
            "CREATE CLASS B ( M INTEGER );",
            "CREATE CLASS C ( M INTEGER );",
            "CREATE CLASS D EXTEND B, C ( );",
        ]);
        assert_eq!(
            catalog.resolve_interface("D").unwrap_err(),
            CatalogError::AmbiguousMember("M".into())
        );
    }

    #[test]
    fn nested_set_of_requires_key() {
        let Stmt::CreateClass(decl) = parse_statement(
            "CREATE CLASS X ( Outer SET OF ( A STRING, Inner SET OF ( B STRING ) ) );",
        )
        .unwrap() else {
            panic!()
        };
        assert!(matches!(lower_class(&decl), Err(CatalogError::InvalidClass(_))));
    }

    fn paper_catalog() -> Catalog {
        catalog_with(&[
            "CREATE CLASS BANKS ( Name STRING );",
            "CREATE CLASS CONTRACTORS ( Name STRING, Bank BANKS, ID STRING ) KEY(ID);",
            "CREATE CLASS GOODS ( Art STRING, Turnover SET OF ( DocN STRING, Cntr CONTRACTORS, Pieces INTEGER ) KEY(DocN), Pieces INTEGER ) KEY(Art);",
            "CREATE CLASS DOCS ( DocN STRING, Date DATETIME, Comment STRING, Cntr CONTRACTORS, Items SET OF ( Art STRING, Pieces INTEGER ) KEY(Art), DoShip(inDate DATETIME) ) KEY(DocN) REFERENCE Items(.Art) ON GOODS(.Art);",
        ])
    }

    #[test]
    fn path_through_set_of_and_reference() {
        let catalog = paper_catalog();
        let path = crate::parser::parse_path("GOODS.Turnover.Cntr").unwrap();
        let binding = lookup_path(&catalog, &path, None).unwrap();
        assert_eq!(binding.segments[0].after, PathCursor::Objects("GOODS".into()));
        assert!(matches!(binding.segments[1].after, PathCursor::SetRows { .. }));
        assert_eq!(binding.terminal(), &PathCursor::Objects("CONTRACTORS".into()));
    }

    #[test]
    fn context_member_path_resolves() {
        let catalog = paper_catalog();
        let path = crate::parser::parse_path("Cntr.Bank").unwrap();
        let binding = lookup_path(&catalog, &path, Some("DOCS")).unwrap();
        assert_eq!(binding.segments[0].after, PathCursor::Objects("CONTRACTORS".into()));
        assert_eq!(binding.terminal(), &PathCursor::Objects("BANKS".into()));
        // without a context the same path is unknown
        assert!(matches!(
            lookup_path(&catalog, &path, None),
            Err(CatalogError::UnknownName(_))
        ));
    }

    #[test]
    fn scalars_cannot_be_traversed() {
        let catalog = paper_catalog();
        let path = crate::parser::parse_path("BANKS.Name.X").unwrap();
        assert!(matches!(
            lookup_path(&catalog, &path, None),
            Err(CatalogError::NotTraversable(_))
        ));
    }

    #[test]
    fn realization_shadowing_is_local() {
        let mut catalog = catalog_with(&[
            "CREATE CLASS DOCS ( Items SET OF ( Art STRING ) KEY(Art) );",
            "CREATE CLASS SALES EXTEND DOCS ( );",
        ]);
        catalog.set_realization("DOCS", "Items", Realization::Stored);
        let (provider, _) = catalog.effective_realization("SALES", "Items").unwrap();
        assert_eq!(provider, "DOCS");

        let select = crate::parser::parse_statement("SELECT Art FROM X;").unwrap();
        let Stmt::Select(select) = select else { panic!() };
        catalog.set_realization("SALES", "Items", Realization::Query(select));
        let (provider, realization) = catalog.effective_realization("SALES", "Items").unwrap();
        assert_eq!(provider, "SALES");
        assert!(matches!(realization, Realization::Query(_)));
        // parent view is unchanged
        let (provider, realization) = catalog.effective_realization("DOCS", "Items").unwrap();
        assert_eq!(provider, "DOCS");
        assert!(matches!(realization, Realization::Stored));
    }
}
