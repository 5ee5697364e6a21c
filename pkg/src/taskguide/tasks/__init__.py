from .io import (
    RecipeParseError,
    SchemaError,
    library_from_json_obj,
    library_to_json_obj,
    load_bundled_library,
    load_library,
    normalize_label,
    save_library,
    validate_generated_recipe,
)
from .model import (
    ComplexStep,
    Cursor,
    GatherStep,
    Hologram,
    HologramKind,
    SimpleStep,
    Step,
    SubStep,
    TaskLibrary,
    TaskRecipe,
    duration_at,
    first_position,
    holograms_at,
    instruction_at,
    next_position,
    positions,
    prev_position,
    step_at,
)

__all__ = [name for name in dir() if not name.startswith("_")]
