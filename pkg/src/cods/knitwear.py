"""Knitwear design space and composition of solutions into image prompts.

The built-in space ships the six garment dimensions with their canonical
representative elements; project-specific elements are added by merging a
user extension document. A solved selection is rendered into a text-to-image
prompt through a plain-text template with {dimension-name} placeholders.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Union

from .space import DesignSpace, Dimension, MetaInfo, SolutionMatrix, merge_space_document

GARMENT_TYPES = (
    "hoodie",
    "jacket",
    "turtleneck sweater",
    "henley shirt",
    "a-line dress",
    "off-shoulder dress",
    "bias-cut knit dress",
)
SURFACE_PATTERNS = (
    "ribbed knit detail",
    "jacquard weave pattern",
    "tweed knit surface",
    "trellis knit texture",
    "striped knitted ribs",
)
KNITTING_TECHNIQUES = (
    "herringbone stitch",
    "chevron stitch",
    "seed stitch",
    "moss stitch",
    "lace stitch",
    "rib stitch",
    "brioche stitch",
    "waffle stitch",
)
AESTHETIC_STYLES = (
    "nordic folk",
    "vintage-inspired",
    "bohemian crochet",
    "minimalist",
    "geomorphic",
)
COLOR_PALETTES = (
    "pastel color",
    "tropical color",
    "vintage floral color",
    "architectural gray color",
    "desert tones color",
)
VISUAL_MOTIFS = (
    "cloud silhouette",
    "marshmallow texture",
    "magic forest",
    "oil paint touch",
    "geometric blocks",
    "pixel shapes",
    "mechanical gears",
    "grain of shifting sand",
)


class TemplateError(Exception):
    """A prompt template references dimensions the space does not have."""


def builtin_knit_space() -> DesignSpace:
    """The six-dimension knitwear space with its built-in element sets."""
    dims = (
        Dimension("garment type", GARMENT_TYPES),
        Dimension("surface pattern", SURFACE_PATTERNS),
        Dimension("knitting technique", KNITTING_TECHNIQUES),
        Dimension("aesthetic style", AESTHETIC_STYLES),
        Dimension("color palette", COLOR_PALETTES),
        Dimension("visual motif", VISUAL_MOTIFS),
    )
    meta = MetaInfo(
        audience="knitwear fashion designer",
        dimension_descriptions={
            "garment type": "Structural form and silhouette of the piece.",
            "surface pattern": "Surface texture and decorative patterning of the knitted fabric.",
            "knitting technique": "Stitch construction; different stitches yield different structure and hand-feel.",
            "aesthetic style": "Overall stylistic identity the piece should read as.",
            "color palette": "Color composition and tonal theme.",
            "visual motif": "Conceptual theme or inspiration translated into visible form.",
        },
    )
    return DesignSpace(name="knitwear-design", meta=meta, dimensions=dims)


def extend_knit_space(doc: Mapping) -> DesignSpace:
    """Built-in space merged with a user extension document."""
    return merge_space_document(builtin_knit_space(), doc)


_SLOT = re.compile(r"\{([^{}\n]+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    """Connective text with {dimension-name} slots, each used at most once."""

    text: str

    @property
    def slots(self) -> tuple:
        return tuple(_SLOT.findall(self.text))

    def validate(self, space: DesignSpace) -> None:
        names = {d.name for d in space.dimensions}
        seen = set()
        for slot in self.slots:
            if slot not in names:
                raise TemplateError(f"template slot {{{slot}}} names no dimension of '{space.name}'")
            if slot in seen:
                raise TemplateError(f"template slot {{{slot}}} appears more than once")
            seen.add(slot)


def load_prompt_template(path: Optional[Union[str, Path]] = None) -> PromptTemplate:
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
    else:
        text = resources.files("cods").joinpath("data", "knit_prompt_template.txt").read_text(encoding="utf-8")
    return PromptTemplate(text=text.strip())


def compose_image_prompt(
    space: DesignSpace, solution: SolutionMatrix, template: Optional[PromptTemplate] = None
) -> str:
    """Instantiate the template with the selected element per dimension."""
    tpl = template or load_prompt_template()
    tpl.validate(space)
    if solution.shape != space.shape or solution.dim_sizes != space.dim_sizes:
        raise ValueError("solution shape does not match the knitwear space")
    selected = {}
    for i, dim in enumerate(space.dimensions):
        picked = [dim.elements[int(j)] for j in range(len(dim.elements)) if solution.cells[i, j]]
        if len(picked) != 1:
            raise ValueError(f"dimension '{dim.name}' must select exactly one element")
        selected[dim.name] = picked[0]
    return _SLOT.sub(lambda match: selected[match.group(1)], tpl.text)
