"""Technology categorization and expressibility checks.

The registry mirrors a reviewable data file grouping thirteen declarative
deployment technologies into three categories: general purpose (gp),
provider specific (provs) and platform specific (plats). check() decides
whether a validated model fits a technology and, when it does not, names
every blocking element with a reason.

Category rules:

  provs   every managed cloud service component must belong to the
          technology's provider
  plats   with a container-image bundle requirement: every multi-level
          software stack must carry a container image on its top
          component; with requires_existing_infrastructure: hosting
          leaves that are machines or provisioned infrastructure services
          cannot be created by the technology
  gp      no category blockers
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

import yaml

from . import model as m
from .errors import UnknownTechnologyError
from .validation import ValidatedModel

TECHNOLOGIES_RESOURCE = "technologies.yaml"

FEATURES = frozenset(
    {
        "multi_provider",
        "xaas",
        "structuring",
        "custom_entities",
        "desired_state",
        "lifecycle_hooks",
    }
)

PROVIDERS = ("aws", "azure", "openstack")

# Blocker reason codes.
PROVIDER_MISMATCH = "PROVIDER_MISMATCH"
MISSING_PLATFORM_BUNDLE = "MISSING_PLATFORM_BUNDLE"
REQUIRES_EXISTING_INFRASTRUCTURE = "REQUIRES_EXISTING_INFRASTRUCTURE"


class Category(str, Enum):
    GENERAL_PURPOSE = "gp"
    PROVIDER_SPECIFIC = "provs"
    PLATFORM_SPECIFIC = "plats"


@dataclass(frozen=True)
class Technology:
    name: str
    display_name: str
    category: Category
    provider_scope: str  # "all" or a single provider
    features: frozenset[str]
    bundle_requirement: str | None = None
    requires_existing_infrastructure: bool = False
    note: str | None = None

    def __post_init__(self):
        unknown = self.features - FEATURES
        if unknown:
            raise ValueError(f"{self.name}: unknown features {sorted(unknown)}")
        if self.category is Category.GENERAL_PURPOSE and self.features != FEATURES:
            raise ValueError(f"{self.name}: general purpose requires the full feature set")
        if self.category is Category.PROVIDER_SPECIFIC:
            if "multi_provider" in self.features:
                raise ValueError(f"{self.name}: provider specific excludes multi_provider")
            if self.provider_scope not in PROVIDERS:
                raise ValueError(f"{self.name}: provider specific needs a single provider scope")


@dataclass(frozen=True)
class Blocker:
    subject: str  # component or relation name
    code: str
    message: str


@dataclass(frozen=True)
class TargetReport:
    technology: str
    blockers: tuple[Blocker, ...]

    @property
    def compatible(self) -> bool:
        return not self.blockers

    @property
    def verdict(self) -> str:
        return "compatible" if self.compatible else "incompatible"


def _technology_from_data(entry: dict) -> Technology:
    return Technology(
        name=entry["name"],
        display_name=entry["display_name"],
        category=Category(entry["category"]),
        provider_scope=entry.get("provider_scope", "all"),
        features=frozenset(entry.get("features", ())),
        bundle_requirement=entry.get("bundle_requirement"),
        requires_existing_infrastructure=entry.get("requires_existing_infrastructure", False),
        note=entry.get("note"),
    )


@lru_cache(maxsize=1)
def _load() -> tuple[tuple[Technology, ...], tuple[Technology, ...]]:
    text = resources.files("edmm.data").joinpath(TECHNOLOGIES_RESOURCE).read_text("utf-8")
    data = yaml.safe_load(text)
    survey = tuple(_technology_from_data(entry) for entry in data["survey"])
    additional = tuple(_technology_from_data(entry) for entry in data.get("additional", ()))
    return survey, additional


def registry() -> list[Technology]:
    """The thirteen surveyed technologies, in popularity order."""
    return list(_load()[0])


def all_targets() -> list[Technology]:
    """Surveyed technologies plus additional transformation-only targets."""
    survey, additional = _load()
    return list(survey) + list(additional)


def technology(name: str) -> Technology:
    for tech in all_targets():
        if tech.name == name:
            return tech
    raise UnknownTechnologyError(f"unknown technology {name!r}")


# ---------------------------------------------------------------------------
# Expressibility rules


def _is_platform_service(model: m.DeploymentModel, comp: m.Component) -> bool:
    return m.type_is(model, comp.type, "platform_service")


def _provider_of(model: m.DeploymentModel, comp: m.Component) -> str | None:
    chain = m.resolve_component_type(model, comp.type)
    provider = m.effective_metadata(chain).get("provider")
    return provider if isinstance(provider, str) else None


def _tops_of_stacks(model: m.DeploymentModel) -> list[m.Component]:
    hosted = set()
    for rel in model.relations:
        if m.relation_family(model, rel) == m.HOSTED_ON:
            hosted.add(rel.target)
    return [comp for name, comp in model.components.items() if name not in hosted]


def _has_container_image(comp: m.Component) -> bool:
    return any(a.kind is m.ArtifactKind.CONTAINER_IMAGE for a in comp.artifacts)


def check(validated: ValidatedModel, tech: Technology | str) -> TargetReport:
    """Decide whether the model is expressible in the technology; the
    report lists one blocker per inexpressible element."""
    if isinstance(tech, str):
        tech = technology(tech)
    model = validated.model
    blockers: list[Blocker] = []

    if tech.category is Category.PROVIDER_SPECIFIC:
        for comp in model.components.values():
            if not _is_platform_service(model, comp):
                continue
            provider = _provider_of(model, comp)
            if provider != tech.provider_scope:
                blockers.append(
                    Blocker(
                        comp.name,
                        PROVIDER_MISMATCH,
                        f"managed service of provider {provider or 'unknown'!s} "
                        f"cannot be deployed through {tech.display_name} "
                        f"(supports {tech.provider_scope} only)",
                    )
                )

    if tech.bundle_requirement == "container-image":
        for top in _tops_of_stacks(model):
            stack = m.hosting_stack(model, top)
            if len(stack) < 2:
                continue
            if not m.type_is(model, top.type, "software_component"):
                continue
            if not _has_container_image(top):
                blockers.append(
                    Blocker(
                        top.name,
                        MISSING_PLATFORM_BUNDLE,
                        f"stack top {top.name!r} carries no container-image artifact; "
                        f"{tech.display_name} deploys container images only",
                    )
                )

    if tech.requires_existing_infrastructure:
        for comp in model.components.values():
            if m.hosting_stack(model, comp)[-1].name != comp.name:
                continue  # not a hosting leaf
            chain = m.resolve_component_type(model, comp.type)
            is_machine = m.type_is(model, comp.type, "compute")
            is_iaas = (
                _is_platform_service(model, comp)
                and m.effective_metadata(chain).get("delivery_model") == "iaas"
            )
            if is_machine or is_iaas:
                blockers.append(
                    Blocker(
                        comp.name,
                        REQUIRES_EXISTING_INFRASTRUCTURE,
                        f"{tech.display_name} configures existing machines and cannot "
                        f"provision hosting leaf {comp.name!r}",
                    )
                )

    blockers.sort(key=lambda b: (b.subject, b.code))
    return TargetReport(technology=tech.name, blockers=tuple(blockers))


def render_report_text(report: TargetReport) -> str:
    lines = [f"{report.technology}: {report.verdict}"]
    for blocker in report.blockers:
        lines.append(f"  {blocker.subject}: {blocker.message} [{blocker.code}]")
    return "\n".join(lines)


def render_report_machine(report: TargetReport) -> str:
    lines = ["\t".join(("verdict", report.technology, report.verdict))]
    for b in report.blockers:
        fields = ("blocker", b.subject, b.code, b.message)
        lines.append("\t".join(f.replace("\t", " ").replace("\n", " ") for f in fields))
    return "\n".join(lines)
