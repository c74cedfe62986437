"""Loading service repositories, taxonomies and tasks.

The canonical format is three JSON files::

    services.json  [{"id": 0, "inputs": ["a"], "outputs": ["b"],
                     "qos": {"t": 1.0, "ct": 2.0, "r": 0.9, "a": 0.95}}, ...]
    taxonomy.json  {"root": "thing", "edges": [["thing", "a"], ...]}
    task.json      {"inputs": ["a"], "outputs": ["b"]}

A services entry may carry an optional ``"name"``. ``import_wsc`` reads the
XML layout of the WSC-08/09 challenge sets on a best-effort basis.
"""

from __future__ import annotations

import json
import logging
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from meeda.model import CompositionTask, ModelError, QosVector, Service
from meeda.ontology import OntologyError, Taxonomy

log = logging.getLogger(__name__)


class IngestError(ValueError):
    pass


@dataclass(eq=False)
class Repository:
    services: list[Service]
    taxonomy: Taxonomy
    # concept -> ids of services producing / consuming it
    producers: dict[str, list[int]] = field(init=False)
    consumers: dict[str, list[int]] = field(init=False)

    def __post_init__(self):
        if not self.services:
            raise IngestError("empty repository")
        for i, s in enumerate(self.services):
            if s.id != i:
                raise IngestError(f"service ids must be dense 0..n-1; position {i} holds id {s.id}")
            for c in sorted(s.inputs | s.outputs):
                if c not in self.taxonomy:
                    raise IngestError(f"service {s.id} references undeclared concept {c!r} (dangling concept)")
        self.producers = {}
        self.consumers = {}
        for s in self.services:
            for c in s.outputs:
                self.producers.setdefault(c, []).append(s.id)
            for c in s.inputs:
                self.consumers.setdefault(c, []).append(s.id)
        # concepts each service can satisfy through exact or plugin matches
        self.provides: list[frozenset[str]] = [self.satisfiable_by(s.outputs) for s in self.services]

    def __len__(self) -> int:
        return len(self.services)

    def __getitem__(self, i: int) -> Service:
        return self.services[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Repository):
            return NotImplemented
        return (
            self.services == other.services
            and self.taxonomy.root == other.taxonomy.root
            and sorted(self.taxonomy.edges()) == sorted(other.taxonomy.edges())
        )

    def satisfiable_by(self, concepts) -> frozenset[str]:
        out: set[str] = set()
        for c in concepts:
            out |= self.taxonomy.ancestor_set(c)
        return frozenset(out)

    def concept_index(self) -> dict[str, dict[str, list[int]]]:
        return {
            c: {"producers": self.producers.get(c, []), "consumers": self.consumers.get(c, [])}
            for c in sorted(set(self.producers) | set(self.consumers))
        }


def _read_json(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise IngestError(f"missing file: {path}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise IngestError(f"{path}: parse error at line {e.lineno} column {e.colno}: {e.msg}") from None


def _concepts(value, where: str) -> frozenset[str]:
    if not isinstance(value, list) or not all(isinstance(c, str) for c in value):
        raise IngestError(f"{where}: expected a list of concept names")
    return frozenset(value)


def parse_taxonomy(data, where: str = "taxonomy") -> Taxonomy:
    if not isinstance(data, dict) or not isinstance(data.get("root"), str):
        raise IngestError(f"{where}: expected an object with a string 'root'")
    edges = data.get("edges", [])
    if not isinstance(edges, list):
        raise IngestError(f"{where}: 'edges' must be a list")
    pairs = []
    for k, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(c, str) for c in e)):
            raise IngestError(f"{where}: edge #{k} must be [parent, child]")
        pairs.append((e[0], e[1]))
    try:
        tax = Taxonomy(data["root"], pairs)
    except OntologyError as e:
        raise IngestError(f"{where}: {e}") from None
    if tax.dropped_edges:
        log.info("taxonomy: kept first parent for %d multiply-inherited concepts", len(tax.dropped_edges))
    return tax


def parse_services(data, where: str = "services") -> list[Service]:
    if not isinstance(data, list):
        raise IngestError(f"{where}: expected a list of services")
    by_id: dict[int, Service] = {}
    for k, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise IngestError(f"{where}: entry #{k} is not an object")
        sid = entry.get("id")
        if not isinstance(sid, int) or isinstance(sid, bool):
            raise IngestError(f"{where}: entry #{k} lacks an integer 'id'")
        if sid in by_id:
            raise IngestError(f"{where}: duplicate service id {sid}")
        q = entry.get("qos")
        if not isinstance(q, dict) or not {"t", "ct", "r", "a"} <= q.keys():
            raise IngestError(f"{where}: service {sid} needs qos with t, ct, r, a")
        try:
            qos = QosVector(t=q["t"], ct=q["ct"], r=q["r"], a=q["a"])
        except ModelError as e:
            raise IngestError(f"{where}: service {sid}: QoS out of range: {e}") from None
        by_id[sid] = Service(
            id=sid,
            inputs=_concepts(entry.get("inputs"), f"{where}: service {sid} inputs"),
            outputs=_concepts(entry.get("outputs"), f"{where}: service {sid} outputs"),
            qos=qos,
            name=str(entry.get("name", "")),
        )
    if not by_id:
        raise IngestError("empty repository")
    if sorted(by_id) != list(range(len(by_id))):
        raise IngestError(f"{where}: service ids must be dense 0..{len(by_id) - 1}")
    return [by_id[i] for i in range(len(by_id))]


def parse_task(data, where: str = "task") -> CompositionTask:
    if not isinstance(data, dict):
        raise IngestError(f"{where}: expected an object with 'inputs' and 'outputs'")
    try:
        return CompositionTask(
            _concepts(data.get("inputs"), f"{where} inputs"),
            _concepts(data.get("outputs"), f"{where} outputs"),
        )
    except ModelError as e:
        raise IngestError(f"{where}: {e}") from None


def build(services: list[Service], taxonomy: Taxonomy, task: CompositionTask) -> tuple[Repository, CompositionTask]:
    repo = Repository(services, taxonomy)
    for c in sorted(task.inputs | task.outputs):
        if c not in taxonomy:
            raise IngestError(f"task references undeclared concept {c!r} (dangling concept)")
    return repo, task


def load_canonical(services_path, taxonomy_path, task_path) -> tuple[Repository, CompositionTask]:
    taxonomy = parse_taxonomy(_read_json(taxonomy_path), str(taxonomy_path))
    services = parse_services(_read_json(services_path), str(services_path))
    task = parse_task(_read_json(task_path), str(task_path))
    return build(services, taxonomy, task)


def load_dir(path) -> tuple[Repository, CompositionTask]:
    """Load ``services.json``, ``taxonomy.json`` and ``task.json`` from one directory."""
    p = Path(path)
    return load_canonical(p / "services.json", p / "taxonomy.json", p / "task.json")


def to_json(repo: Repository, task: CompositionTask) -> dict[str, object]:
    services = []
    for s in repo.services:
        entry: dict[str, object] = {
            "id": s.id,
            "inputs": sorted(s.inputs),
            "outputs": sorted(s.outputs),
            "qos": s.qos.as_dict(),
        }
        if s.name:
            entry["name"] = s.name
        services.append(entry)
    tax = repo.taxonomy
    # parents before children so the file reloads in one pass
    edges = []
    stack = [tax.root]
    while stack:
        c = stack.pop()
        for ch in sorted(tax.children.get(c, ()), reverse=True):
            edges.append([c, ch])
            stack.append(ch)
    return {
        "services": services,
        "taxonomy": {"root": tax.root, "edges": edges},
        "task": {"inputs": sorted(task.inputs), "outputs": sorted(task.outputs)},
    }


def dump_canonical(repo: Repository, task: CompositionTask, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = to_json(repo, task)
    for name in ("services", "taxonomy", "task"):
        with open(out / f"{name}.json", "w", encoding="utf-8") as f:
            json.dump(doc[name], f, indent=1, sort_keys=True)
            f.write("\n")
    return out


# -- WSC-08/09 XML ---------------------------------------------------------

_WSC_FILES = ("taxonomy.xml", "services.xml", "problem.xml")
_QOS_ALIASES = {
    "t": ("t", "time", "responsetime", "res"),
    "ct": ("ct", "c", "cost"),
    "r": ("r", "rel", "reliability"),
    "a": ("a", "ava", "avail", "availability"),
}


def _parse_xml(path: Path) -> ET.Element:
    if not path.exists():
        raise IngestError(f"missing WSC file: {path}")
    try:
        return ET.parse(path).getroot()
    except ET.ParseError as e:
        line, col = e.position
        raise IngestError(f"{path}: XML parse error at line {line} column {col}") from None


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1].lower()


def _wsc_taxonomy(root_el: ET.Element, path: Path) -> tuple[Taxonomy, dict[str, str]]:
    edges: list[tuple[str, str]] = []
    instance_of: dict[str, str] = {}
    tops: list[str] = []

    def walk(el: ET.Element, parent: str | None):
        tag = _local(el.tag)
        name = el.get("name")
        if tag == "concept":
            if not name:
                raise IngestError(f"{path}: <concept> without a name attribute")
            if parent is None:
                tops.append(name)
            else:
                edges.append((parent, name))
            for ch in el:
                walk(ch, name)
        elif tag == "instance":
            if not name or parent is None:
                raise IngestError(f"{path}: <instance> must be named and nested in a concept")
            instance_of.setdefault(name, parent)
        else:
            raise IngestError(f"{path}: unrecognized element <{el.tag}>")

    if _local(root_el.tag) == "concept":
        walk(root_el, None)
    else:
        for ch in root_el:
            walk(ch, None)
    if not tops:
        raise IngestError(f"{path}: no concepts found")
    if len(tops) == 1:
        root = tops[0]
    else:
        root = "Thing"
        edges = [(root, t) for t in tops] + edges
    try:
        return Taxonomy(root, edges), instance_of
    except OntologyError as e:
        raise IngestError(f"{path}: {e}") from None


def _wsc_names(el: ET.Element | None, instance_of: dict[str, str], taxonomy: Taxonomy, where: str) -> frozenset[str]:
    if el is None:
        return frozenset()
    out = set()
    for ch in el:
        if _local(ch.tag) not in ("instance", "concept"):
            raise IngestError(f"{where}: unrecognized element <{ch.tag}>")
        name = ch.get("name")
        if name in instance_of:
            out.add(instance_of[name])
        elif name in taxonomy:
            out.add(name)
        else:
            raise IngestError(f"{where}: {name!r} is neither an instance nor a concept (dangling concept)")
    return frozenset(out)


def _wsc_qos(el: ET.Element) -> dict[str, float] | None:
    attrs = {k.lower(): v for k, v in el.attrib.items()}
    for ch in el:
        if _local(ch.tag) == "qos":
            attrs.update({k.lower(): v for k, v in ch.attrib.items()})
    found = {}
    for key, names in _QOS_ALIASES.items():
        for n in names:
            if n in attrs:
                found[key] = float(attrs[n])
                break
    return found if len(found) == 4 else None


def import_wsc(dir_path, dump_dir=None, dump: bool = True) -> tuple[Repository, CompositionTask]:
    """Import a WSC-style directory (taxonomy.xml, services.xml, problem.xml).

    Instances are mapped to the concept they belong to. Each ``<service>``
    needs QoS either as attributes (t/ct/r/a) or in a nested ``<qos>``
    element. Unless ``dump`` is false, the canonical JSON is written to
    ``dump_dir`` (default ``<dir_path>/canonical``).
    """
    d = Path(dir_path)
    tax_path, svc_path, prob_path = (d / f for f in _WSC_FILES)
    taxonomy, instance_of = _wsc_taxonomy(_parse_xml(tax_path), tax_path)

    services: list[Service] = []
    no_qos: list[str] = []
    for el in _parse_xml(svc_path):
        if _local(el.tag) != "service":
            raise IngestError(f"{svc_path}: unrecognized element <{el.tag}>")
        name = el.get("name") or f"service{len(services)}"
        parts = {_local(ch.tag): ch for ch in el}
        unknown = set(parts) - {"inputs", "outputs", "qos"}
        if unknown:
            raise IngestError(f"{svc_path}: service {name}: unrecognized element <{sorted(unknown)[0]}>")
        q = _wsc_qos(el)
        if q is None:
            no_qos.append(name)
            continue
        try:
            qos = QosVector(**q)
        except ModelError as e:
            raise IngestError(f"{svc_path}: service {name}: QoS out of range: {e}") from None
        services.append(
            Service(
                id=len(services),
                inputs=_wsc_names(parts.get("inputs"), instance_of, taxonomy, f"{svc_path}: {name}"),
                outputs=_wsc_names(parts.get("outputs"), instance_of, taxonomy, f"{svc_path}: {name}"),
                qos=qos,
                name=name,
            )
        )
    if no_qos:
        raise IngestError(f"{svc_path}: QoS attributes missing for services: {', '.join(no_qos)}")

    prob = _parse_xml(prob_path)
    provided = prob.find(".//provided")
    wanted = prob.find(".//wanted")
    if provided is None or wanted is None:
        raise IngestError(f"{prob_path}: expected <provided> and <wanted> elements")
    try:
        task = CompositionTask(
            _wsc_names(provided, instance_of, taxonomy, str(prob_path)),
            _wsc_names(wanted, instance_of, taxonomy, str(prob_path)),
        )
    except ModelError as e:
        raise IngestError(f"{prob_path}: {e}") from None

    repo, task = build(services, taxonomy, task)
    if dump:
        dump_canonical(repo, task, dump_dir if dump_dir is not None else d / "canonical")
    return repo, task


def load_any(path) -> tuple[Repository, CompositionTask]:
    """Canonical JSON directory, or a WSC XML directory when no services.json is present."""
    p = Path(path)
    if (p / "services.json").exists():
        return load_dir(p)
    if all((p / f).exists() for f in _WSC_FILES):
        return import_wsc(p, dump=False)
    raise IngestError(f"{os.fspath(p)}: neither canonical JSON nor WSC XML files found")
