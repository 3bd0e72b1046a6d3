"""
Built-in case-study scenarios.

``env-iot`` is the environmental monitoring testbed: six field sensors
(three air temperature, three surface-water precipitation gauges) feeding a
relay, a gateway half a kilometre from the field and a single-host
datacenter. ``jose`` is the five-city flood monitoring deployment with
storage datacenters in every city and compute datacenters in three of them.
"""

import inspect
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from src.core.config import config
from src.core.errors import InvalidOption, UnknownPreset
from src.scenario.models import ScenarioSpec, parse_duration
from src.scenario.parser import replicate

logger = logging.getLogger(__name__)

DAY_S = 86400

ENV_IOT_SENSORS = (
    ("S1", "air_temperature", (0.0, 0.0, 0.0)),
    ("S2", "air_temperature", (20.0, 0.0, 0.0)),
    ("S3", "air_temperature", (40.0, 0.0, 0.0)),
    ("S4", "precipitation", (0.0, 30.0, 0.0)),
    ("S5", "precipitation", (20.0, 30.0, 0.0)),
    ("S6", "precipitation", (40.0, 30.0, 0.0)),
)

JOSE_METRICS = ("air_temperature", "air_humidity", "air_pressure", "wind_speed", "precipitation")
JOSE_CITIES = ("C1", "C2", "C3", "C4", "C5")
JOSE_COMPUTE_CITIES = ("C1", "C2", "C3")


def _data(*parts: str) -> str:
    return str(Path(config.DATA_DIR, *parts))


def env_iot(
    locations: int = 1,
    interval: Any = "6h",
    days: int = 30,
    seed: int = config.DEFAULT_SEED,
    data_dir: Optional[str] = None,
) -> ScenarioSpec:
    """The 9-node environmental testbed, optionally replicated over ``locations`` field sites."""
    if locations < 1:
        raise ValueError(f"locations must be >= 1, got {locations}")
    base = Path(data_dir) if data_dir else Path(config.DATA_DIR)
    battery = {"kind": "battery", "capacity_J": 10_000.0}
    sensors = [
        {
            "id": sensor_id,
            "metric": metric,
            "interval": parse_duration(interval),
            "location": location,
            "connection": "short_range_radio",
            "power": battery,
            "dataset": {"path": str(base / "env-iot" / f"{sensor_id}.csv")},
            "target": "R1",
        }
        for sensor_id, metric, location in ENV_IOT_SENSORS
    ]
    document = {
        "name": "env-iot",
        "seed": seed,
        "horizon": days * DAY_S,
        "sensors": sensors,
        "links": [
            {
                "id": "R1",
                "name": "field relay",
                "location": (20.0, 15.0, 0.0),
                "connection": "long_range_radio",
                "power": battery,
                "target": "G1",
            }
        ],
        # Gateway sits 0.5 km from the field, mains powered
        "gateways": [
            {
                "id": "G1",
                "location": (520.0, 15.0, 0.0),
                "connection": "cellular_3g",
                "power": "continuous",
                "target": "DC1",
            }
        ],
        "datacenters": [
            {
                "id": "DC1",
                "hosts": [{"id": "H1"}],
                "vms": [{"id": "vm1", "services": ["monitoring"]}],
                "on_store": [{"service": "monitoring"}],
            }
        ],
        "services": {"types": [{"id": "monitoring", "name": "record monitoring", "demand_mi": 2400}]},
    }
    spec = ScenarioSpec.model_validate(document)
    if locations > 1:
        spec = replicate(spec, locations)
        spec.name = f"env-iot-x{locations}"
    logger.info(f"Preset env-iot: {locations} location(s), {spec.node_count()} nodes, interval={interval}")
    return spec


def _jose_city(city: str, index: int, sensors_per_type: int, interval: int) -> Dict[str, Any]:
    origin = (index * 50_000.0, 0.0, 0.0)
    field_site = (origin[0] + 500.0, 0.0, 0.0)
    sensors = [
        {
            "id": f"{city}-{metric}",
            "metric": metric,
            "interval": interval,
            "location": field_site,
            "connection": "long_range_radio",
            "power": {"kind": "battery", "capacity_J": 50_000.0},
            "dataset": {"path": _data("jose", f"{metric}.csv")},
            "target": f"{city}-gw",
            "count": sensors_per_type,
        }
        for metric in JOSE_METRICS
    ]
    gateway = {"id": f"{city}-gw", "location": origin, "connection": "cellular_3g", "target": f"{city}-storage"}
    compute = JOSE_COMPUTE_CITIES[index % len(JOSE_COMPUTE_CITIES)]
    storage = {
        "id": f"{city}-storage",
        "location": origin,
        # 2 x 6-core hyper-threaded 3 GHz, 10 VMs per machine
        "hosts": [{"id": f"{city}-pm", "pes": 24, "mips_per_pe": 3000, "vm_slots": 10, "count": 10}],
        "vms": [{"id": f"{city}-svm", "services": ["data-acquisition"], "count": 100}],
        "on_store": [
            {"service": "data-acquisition"},
            {"service": "alert-analysis", "datacenter": f"{compute}-compute"},
        ],
    }
    return {"sensors": sensors, "gateway": gateway, "storage": storage}


def jose(
    sensors_per_type: int = 1000,
    interval: Any = "24h",
    days: int = 30,
    seed: int = config.DEFAULT_SEED,
) -> ScenarioSpec:
    """Five cities, five sensor types each, storage everywhere and compute in three cities."""
    if sensors_per_type < 1:
        raise ValueError(f"sensors_per_type must be >= 1, got {sensors_per_type}")
    every = parse_duration(interval)
    sensors: List[dict] = []
    gateways: List[dict] = []
    datacenters: List[dict] = []
    for index, city in enumerate(JOSE_CITIES):
        parts = _jose_city(city, index, sensors_per_type, every)
        sensors.extend(parts["sensors"])
        gateways.append(parts["gateway"])
        datacenters.append(parts["storage"])
    for city in JOSE_COMPUTE_CITIES:
        datacenters.append(
            {
                "id": f"{city}-compute",
                "hosts": [{"id": f"{city}-cpm", "pes": 24, "mips_per_pe": 3000, "vm_slots": 10, "count": 400}],
                "vms": [{"id": f"{city}-cvm", "services": ["alert-analysis"], "count": 4000}],
            }
        )
    document = {
        "name": "jose",
        "seed": seed,
        "horizon": days * DAY_S,
        "sensors": sensors,
        "gateways": gateways,
        "datacenters": datacenters,
        "services": {
            "types": [
                {"id": "data-acquisition", "name": "data acquisition", "demand_mi": 1000},
                {"id": "alert-analysis", "name": "flood alert analysis", "demand_mi": 48000},
            ],
            "alerts": [{"metric": "precipitation", "red_threshold": 25, "rise_epsilon": "0.1"}],
        },
    }
    spec = ScenarioSpec.model_validate(document)
    logger.info(f"Preset jose: {spec.sensor_count()} sensors in {len(JOSE_CITIES)} cities")
    return spec


PRESETS: Dict[str, Callable[..., ScenarioSpec]] = {
    "env-iot": env_iot,
    "jose": jose,
}


def get_preset(name: str, **options: Any) -> ScenarioSpec:
    """Build a preset by name. Options the preset does not take, or that are None, are ignored."""
    factory = PRESETS.get(name)
    if factory is None:
        raise UnknownPreset(f"unknown preset {name!r} (available: {', '.join(sorted(PRESETS))})")
    accepted = inspect.signature(factory).parameters
    try:
        return factory(**{k: v for k, v in options.items() if v is not None and k in accepted})
    except ValueError as e:
        raise InvalidOption(f"preset {name}: {e}") from e
