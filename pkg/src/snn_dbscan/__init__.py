"""DBSCAN on event grids as full-leak LIF spiking networks.

Two constructions are provided: ``flat`` (whole frame at once, five timesteps,
pipelined every timestep) and ``systolic`` (one column per timestep, size
independent of the column count), plus partial networks for sub-regions.
"""
from .flat import build_flat
from .grid import (DbscanParams, EventFrame, Label, LabelGrid, dbscan_classify,
                   dbscan_classify_naive, neighborhood_count, parse_frame, parse_labels)
from .harness import (ContractViolation, DeploymentModel, decode_flat, decode_systolic,
                      encode_flat, encode_systolic, estimate_deployment, run_pipelined_flat,
                      run_systolic_stream, verify)
from .network import Network, deserialize, serialize, validate
from .partition import (PartitionSpec, build_partial_flat, build_partial_systolic,
                        merge_partition_outputs, plan_partitions)
from .simulator import BACKEND, SpikeRaster, SpikeSchedule, simulate
from .systolic import build_systolic

__version__ = "0.1.0"
