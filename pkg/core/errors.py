# core/errors.py
# Every error the package raises on purpose. The CLI turns `exit_code` into the
# process exit status, the same way a route turns `status_code` into a response.


class RgcAttnError(Exception):
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class PropertyFailure(RgcAttnError):
    """A symmetry, oracle or tolerance check did not hold."""
    exit_code = 1


class UsageError(RgcAttnError):
    exit_code = 2


class ConfigError(UsageError):
    pass


class InputFileError(RgcAttnError):
    exit_code = 3

    def __init__(self, path, detail: str):
        super().__init__(f"{path}: {detail}")
        self.path = str(path)


# ─────────────────────────────────────────────────────
# Contract violations inside the library
# ─────────────────────────────────────────────────────
class ContractError(RgcAttnError):
    pass


class DimensionError(ContractError):
    def __init__(self, op: str, *shapes):
        shown = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {shown}")
        self.shapes = tuple(tuple(s) for s in shapes)


class NonFiniteError(ContractError):
    pass


class DegenerateGeometryError(ContractError):
    def __init__(self, i: int, j: int, distance: float):
        super().__init__(f"atoms {i} and {j} are {distance:.3e} Å apart")
        self.pair = (i, j)


class SchemaError(ContractError):
    def __init__(self, field: str, detail: str):
        super().__init__(f"{field}: {detail}")
        self.field = field


class ConsistencyError(ContractError):
    pass


class RoutingError(ContractError):
    def __init__(self, sample_id: str, detail: str):
        super().__init__(f"{sample_id}: {detail}")
        self.sample_id = sample_id


class PairingError(ContractError):
    pass


class IntegrityError(ContractError):
    pass


class DivergenceError(RgcAttnError):
    pass
