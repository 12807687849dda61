"""Native JSON model format.

Validated with marshmallow schemas; the loaded structure is resolved into
a :class:`~polyseep.model.SeepageModel` with every cross-reference
checked. :func:`dump_model` writes the same format back, bit-exact on
coordinates.

"""
import json

from marshmallow import (
    Schema,
    ValidationError,
    fields,
    post_dump,
    post_load,
    validate,
    validates_schema,
)
from twisted.logger import Logger
from typing import (  # noqa
    Any,
    Dict,
    List,
    Optional,
    Union,
)

from polyseep.constants import DEFAULT_MATERIAL, FORMAT_VERSION
from polyseep.exceptions import (
    DanglingReferenceError,
    SchemaError,
)
from polyseep.mesh import (
    BoundaryEdge,
    Node,
    PolygonElement,
    PolygonMesh,
    QuadtreeSpec,
    RefineRegion,
    build_quadtree_mesh,
    require_valid,
)
from polyseep.model import (
    DirichletSet,
    FluxSet,
    Material,
    MonitorPoint,
    STEADY_START,
    Schedule,
    SeepageModel,
    TransientSettings,
)
from polyseep.types import JSONDict  # noqa

log = Logger()

POSITIVE = validate.Range(min=0, min_inclusive=False)
NON_NEGATIVE = validate.Range(min=0)


class PointField(fields.Field):
    """An ``[x, y]`` pair"""

    def _deserialize(self, value, attr, data, **kwargs):
        try:
            x, y = value
            return (float(x), float(y))
        except (TypeError, ValueError):
            raise ValidationError("Expected an [x, y] pair.")

    def _serialize(self, value, attr, obj, **kwargs):
        return None if value is None else [value[0], value[1]]


class ScheduleField(fields.Field):
    """``[[t, h], ...]`` knots of a piecewise-linear schedule"""

    def _deserialize(self, value, attr, data, **kwargs):
        try:
            knots = [(float(t), float(h)) for t, h in value]
        except (TypeError, ValueError):
            raise ValidationError("Expected a list of [t, head] knots.")
        try:
            return Schedule(knots)
        except Exception as ex:
            raise ValidationError(str(ex))

    def _serialize(self, value, attr, obj, **kwargs):
        return [[t, h] for t, h in value.knots]


class InitialHeadField(fields.Field):
    """A head, a per-node list of heads or ``"steady"``"""

    def _deserialize(self, value, attr, data, **kwargs):
        if value == STEADY_START:
            return value
        if isinstance(value, bool):
            raise ValidationError("Invalid initial head.")
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, list) and \
                all(isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in value):
            return tuple(float(v) for v in value)
        raise ValidationError(
            "Expected a number, a list of numbers or {!r}.".format(
                STEADY_START))

    def _serialize(self, value, attr, obj, **kwargs):
        if isinstance(value, tuple):
            return list(value)
        return value


class NodeSchema(Schema):
    id = fields.Integer(required=True, strict=True, validate=NON_NEGATIVE)
    x = fields.Float(required=True)
    y = fields.Float(required=True)

    @post_load
    def make(self, data, **kwargs):
        return Node(**data)


class ElementSchema(Schema):
    id = fields.Integer(required=True, strict=True)
    node_ids = fields.List(fields.Integer(strict=True), data_key="nodes",
                           required=True, validate=validate.Length(min=3))
    material_id = fields.String(data_key="material",
                                load_default=DEFAULT_MATERIAL)

    @post_load
    def make(self, data, **kwargs):
        return PolygonElement(**data)


class BoundaryEdgeSchema(Schema):
    nodes = fields.List(fields.Integer(strict=True), required=True,
                        validate=validate.Length(equal=2))
    tag = fields.String(required=True)

    @post_load
    def make(self, data, **kwargs):
        return BoundaryEdge(**data)


class MeshSchema(Schema):
    nodes = fields.List(fields.Nested(NodeSchema), required=True)
    elements = fields.List(fields.Nested(ElementSchema), required=True)
    boundary_edges = fields.List(fields.Nested(BoundaryEdgeSchema),
                                 load_default=list)


class RefineSchema(Schema):
    points = fields.List(PointField(), required=True,
                         validate=validate.Length(min=1, max=2))
    depth = fields.Integer(required=True, strict=True)


class QuadtreeSchema(Schema):
    domain = fields.List(PointField(), required=True,
                         validate=validate.Length(min=3))
    holes = fields.List(fields.List(PointField()), load_default=list)
    max_depth = fields.Integer(required=True, strict=True,
                               validate=validate.Range(min=1))
    min_depth = fields.Integer(load_default=0, strict=True)
    boundary_depth = fields.Integer(load_default=None, allow_none=True,
                                    strict=True)
    refine = fields.List(fields.Nested(RefineSchema), load_default=list)
    balance = fields.Boolean(load_default=True)
    edge_tags = fields.List(fields.String(), load_default=None,
                            allow_none=True)
    hole_tag = fields.String(load_default="impermeable")
    material = fields.String(load_default=DEFAULT_MATERIAL)


class MaterialSchema(Schema):
    kx = fields.Float(required=True, validate=POSITIVE)
    ky = fields.Float(required=True, validate=POSITIVE)
    ss = fields.Float(load_default=0.0, validate=NON_NEGATIVE)

    @post_load
    def make(self, data, **kwargs):
        return Material(**data)


class DirichletSchema(Schema):
    name = fields.String(required=True)
    nodes = fields.List(fields.Integer(strict=True), load_default=None)
    tag = fields.String(load_default=None, load_only=True)
    value = fields.Float(load_default=None, allow_none=True)
    schedule = fields.String(load_default=None, allow_none=True)

    @validates_schema
    def validate_choices(self, data, **kwargs):
        if (data.get("nodes") is None) == (data.get("tag") is None):
            raise ValidationError("Give exactly one of nodes or tag.")
        if (data.get("value") is None) == (data.get("schedule") is None):
            raise ValidationError("Give exactly one of value or schedule.")


class FluxSchema(Schema):
    name = fields.String(required=True)
    edges = fields.List(
        fields.List(fields.Integer(strict=True),
                    validate=validate.Length(equal=2)),
        load_default=None)
    tag = fields.String(load_default=None, load_only=True)
    value = fields.Float(required=True)

    @validates_schema
    def validate_choices(self, data, **kwargs):
        if (data.get("edges") is None) == (data.get("tag") is None):
            raise ValidationError("Give exactly one of edges or tag.")


class BoundaryConditionsSchema(Schema):
    dirichlet = fields.List(fields.Nested(DirichletSchema),
                            load_default=list)
    flux = fields.List(fields.Nested(FluxSchema), load_default=list)


class TransientSchema(Schema):
    t_end = fields.Float(required=True, validate=POSITIVE)
    dt = fields.Float(required=True, validate=POSITIVE)
    initial_head = InitialHeadField(load_default=0.0)
    output_stride = fields.Integer(load_default=1, strict=True,
                                   validate=validate.Range(min=1))

    @validates_schema
    def validate_times(self, data, **kwargs):
        if data["t_end"] < data["dt"]:
            raise ValidationError("t_end must be at least dt.", "t_end")

    @post_load
    def make(self, data, **kwargs):
        return TransientSettings(**data)


class MonitorSchema(Schema):
    name = fields.String(required=True)
    x = fields.Float(required=True)
    y = fields.Float(required=True)

    @post_load
    def make(self, data, **kwargs):
        return MonitorPoint(**data)


class ModelSchema(Schema):
    """Top level of a native model file"""
    format_version = fields.Integer(
        required=True, load_only=True,
        validate=validate.Equal(FORMAT_VERSION))
    title = fields.String(load_default="")
    units = fields.String(load_default="")
    mesh = fields.Nested(MeshSchema, load_default=None)
    quadtree = fields.Nested(QuadtreeSchema, load_default=None,
                             load_only=True)
    materials = fields.Dict(keys=fields.String(),
                            values=fields.Nested(MaterialSchema),
                            required=True,
                            validate=validate.Length(min=1))
    boundary_conditions = fields.Nested(BoundaryConditionsSchema,
                                        load_default=dict)
    schedules = fields.Dict(keys=fields.String(), values=ScheduleField(),
                            load_default=dict)
    transient = fields.Nested(TransientSchema, load_default=None,
                              allow_none=True)
    monitors = fields.List(fields.Nested(MonitorSchema), load_default=list)

    @validates_schema
    def validate_mesh_source(self, data, **kwargs):
        if (data.get("mesh") is None) == (data.get("quadtree") is None):
            raise ValidationError("Give exactly one of mesh or quadtree.")

    @post_dump
    def add_version(self, data, **kwargs):
        data["format_version"] = FORMAT_VERSION
        return data


def _mesh_from(data):
    # type: (JSONDict) -> PolygonMesh
    if data.get("quadtree") is not None:
        qt = data["quadtree"]
        spec = QuadtreeSpec(
            domain=qt["domain"],
            max_depth=qt["max_depth"],
            holes=qt["holes"],
            refine_regions=[RefineRegion(**r) for r in qt["refine"]],
            balance=qt["balance"],
            min_depth=qt["min_depth"],
            boundary_depth=qt["boundary_depth"],
            edge_tags=qt["edge_tags"],
            hole_tag=qt["hole_tag"],
            material_id=qt["material"],
        )
        return build_quadtree_mesh(spec)
    mesh = data["mesh"]
    node_ids = set(n.id for n in mesh["nodes"])
    for el in mesh["elements"]:
        missing = [i for i in el.node_ids if i not in node_ids]
        if missing:
            raise DanglingReferenceError(
                "Element {} refers to missing nodes {}".format(
                    el.id, missing))
    return PolygonMesh(mesh["nodes"], mesh["elements"],
                       mesh["boundary_edges"])


def _resolve(data):
    # type: (JSONDict) -> SeepageModel
    mesh = require_valid(_mesh_from(data))
    tags = set(mesh.tags())
    bcs = data["boundary_conditions"]

    dirichlet = []
    for entry in bcs.get("dirichlet", []):
        nodes = entry["nodes"]
        if nodes is None:
            if entry["tag"] not in tags:
                raise DanglingReferenceError(
                    "Dirichlet set {!r} refers to missing tag {!r}".format(
                        entry["name"], entry["tag"]))
            nodes = mesh.nodes_with_tag(entry["tag"])
        dirichlet.append(DirichletSet(entry["name"], nodes, entry["value"],
                                      entry["schedule"]))

    flux = []
    for entry in bcs.get("flux", []):
        edges = entry["edges"]
        if edges is None:
            if entry["tag"] not in tags:
                raise DanglingReferenceError(
                    "Flux set {!r} refers to missing tag {!r}".format(
                        entry["name"], entry["tag"]))
            edges = mesh.edges_with_tag(entry["tag"])
        flux.append(FluxSet(entry["name"], edges, entry["value"]))

    return SeepageModel(
        mesh=mesh,
        materials=data["materials"],
        dirichlet_sets=dirichlet,
        flux_sets=flux,
        schedules=data["schedules"],
        transient=data["transient"],
        monitors=data["monitors"],
        title=data["title"],
        units=data["units"],
    )


def model_from_dict(data):
    # type: (Any) -> SeepageModel
    """Validate and resolve a native model structure"""
    try:
        loaded = ModelSchema().load(data)
    except ValidationError as ex:
        raise SchemaError("Model file does not match the schema: {}".format(
            json.dumps(ex.messages, sort_keys=True, default=str)),
            messages=ex.messages)
    model = _resolve(loaded)
    log.info("Model loaded", title=model.title, nodes=model.mesh.n_nodes,
             elements=len(model.mesh.elements))
    return model


def parse_native_model(text):
    # type: (Union[str, bytes]) -> SeepageModel
    """Parse native model text"""
    try:
        data = json.loads(text)
    except ValueError as ex:
        raise SchemaError("Invalid JSON: {}".format(ex),
                          line=getattr(ex, "lineno", None))
    return model_from_dict(data)


def serialize_model(model):
    # type: (SeepageModel) -> JSONDict
    """JSON-compatible structure of ``model``, always with an explicit mesh
    """
    data = ModelSchema().dump(model)
    bcs = {
        "dirichlet": [DirichletSchema().dump(d)
                      for d in model.dirichlet_sets],
        "flux": [FluxSchema().dump(f) for f in model.flux_sets],
    }
    data["boundary_conditions"] = bcs
    return data


def dump_model(model):
    # type: (SeepageModel) -> str
    return json.dumps(serialize_model(model), indent=2, sort_keys=True) + "\n"
