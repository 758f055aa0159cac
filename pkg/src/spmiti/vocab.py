"""Shared names: requirements, artifact kinds, metrics, overhead types, measures."""

CONFIDENTIALITY = "confidentiality"
INTEGRITY = "integrity"

CODE = "code"
DATUM = "datum"
ARTIFACT_KINDS = (CODE, DATUM)

HALSTEAD = "halstead"
CYCLOMATIC = "cyclomatic"
INSTRUCTIONS = "instructions"
REMOTE_INSTRUCTIONS = "remote_instructions"
LOCAL_INSTRUCTIONS = "local_instructions"
GUARDED_INSTRUCTIONS = "guarded_instructions"
METRICS = (
    HALSTEAD,
    CYCLOMATIC,
    INSTRUCTIONS,
    REMOTE_INSTRUCTIONS,
    LOCAL_INSTRUCTIONS,
    GUARDED_INSTRUCTIONS,
)
# counts that can never exceed the predicted instruction count
INSTRUCTION_SHARES = (REMOTE_INSTRUCTIONS, LOCAL_INSTRUCTIONS, GUARDED_INSTRUCTIONS)

CLIENT_TIME = "client_time"
CLIENT_MEM = "client_mem"
SERVER_TIME = "server_time"
SERVER_MEM = "server_mem"
NETWORK = "network"
OVERHEAD_TYPES = (CLIENT_TIME, CLIENT_MEM, SERVER_TIME, SERVER_MEM, NETWORK)
ONLINE_OVERHEADS = frozenset({SERVER_TIME, SERVER_MEM, NETWORK})

CC = "CC"
CT = "CT"
TD = "TD"
TA = "TA"
MEASURES = (CC, CT, TD, TA)

DEFAULT_REQUIREMENT_MEASURES = {
    CONFIDENTIALITY: (CC, CT),
    INTEGRITY: (TD, TA),
}
