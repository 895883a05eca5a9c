"""cods: constrained 0-1 selection over structured design spaces.

Model a design task as picking one (or a bounded number of) element(s) per
dimension of a finite design space, maximize a weighted sum of soft
preferences subject to hard rules, and materialize the winning selection into
domain artifacts: chart specifications or image-generation prompts. Hard and
soft rules can be authored directly or generated from a natural-language
requirement through a pluggable chat backend.
"""

from .backends import (
    API_KEY_ENV,
    BackendUnavailableError,
    ChatBackend,
    HttpChatBackend,
    LlmSettings,
    StubBackend,
    StubRule,
    load_stub_rules,
    stub_backend,
)
from .constraints import (
    CompiledConstraintSet,
    ConstraintError,
    FeasibilityReport,
    HardRow,
    Kind,
    RequirementInput,
    SoftRow,
    SymbolicConstraint,
    avoid_each,
    check_feasible,
    compile_constraints,
    constraint_from_doc,
    exclusive,
    forbid,
    load_constraints_document,
    not_all_of,
    objective_value,
    prefer_each,
    require_one_of,
    satisfies_symbolic,
    together,
)
from .knitwear import (
    PromptTemplate,
    TemplateError,
    builtin_knit_space,
    compose_image_prompt,
    extend_knit_space,
    load_prompt_template,
)
from .pipeline import (
    GenerationRecord,
    NoJsonFoundError,
    PipelineConfig,
    ResponseParseError,
    RetriesExhaustedError,
    SchemaViolationError,
    TranscriptEntry,
    parse_constraint_response,
    run_pipeline,
)
from .prompts import (
    CrossScope,
    DimensionScope,
    NO_EXAMPLES_SENTINEL,
    PromptDocument,
    PromptTemplates,
    ReferralExample,
    SEGMENT_LABELS,
    build_cross_prompt,
    build_dimension_prompt,
    load_referral_examples,
    load_templates,
)
from .solver import (
    INFEASIBLE,
    OPTIMAL,
    ResourceLimitError,
    SolveResult,
    SolveStats,
    brute_force_solve,
    explain,
    solve,
)
from .space import (
    DesignSpace,
    Dimension,
    ElementRef,
    MetaInfo,
    SolutionMatrix,
    SolutionError,
    SpaceError,
    SpaceParseError,
    SpaceValidationError,
    UnknownElementError,
    load_design_space,
    merge_space_document,
    padded_shape,
    read_design_space,
    serialize_design_space,
    solution_to_tuple,
    space_to_doc,
    tuple_to_solution,
)
from .visualization import (
    AGGREGATION_METHODS,
    ChartSpec,
    CsvError,
    DatasetSchema,
    Field,
    MARK_TYPES,
    Table,
    TransformError,
    TransformedTable,
    apply_transform,
    build_vis_space,
    chart_spec_json,
    emit_chart_spec,
    infer_schema,
    intrinsic_rules,
    load_table,
    read_table,
    validate_chart_spec,
)

__version__ = "0.1.0"
