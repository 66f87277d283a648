from pocketflow import Node, Flow, BatchNode
import logging
from typing import List, Dict, Any, Optional, Tuple

from .utils.atlas import (
    SweepRecord,
    Transition,
    TransitionReport,
    find_brackets,
    landmark_times,
    refine_transition,
    run_sweep,
    summarize_transitions,
)
from .utils.config import RunConfig
from .utils.export import export_landmarks, export_sweep, export_trajectory
from .utils.limit_cycle import LimitCycle, assemble_global, solve_limit_cycle
from .utils.thermo import CycleReport, report_cycle
from .utils.validate import FAIL, VALIDATION_CHECKS, CheckResult, run_check

logger = logging.getLogger("otto_flow")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _record_write(shared: Dict[str, Any], exec_res: Optional[Tuple[str, bool]]) -> None:
    if exec_res is None:
        return
    message, success = exec_res
    if success:
        logger.info(message)
    else:
        logger.error(message)
        shared["exit_code"] = EXIT_IO


#############################################
# Dispatch Node
#############################################
class DispatchNode(Node):
    def prep(self, shared: Dict[str, Any]) -> RunConfig:
        shared.setdefault("exit_code", EXIT_OK)
        return shared["config"]

    def exec(self, config: RunConfig) -> str:
        return config.mode

    def post(self, shared: Dict[str, Any], prep_res: RunConfig, exec_res: str) -> str:
        logger.info(f"DispatchNode: running mode {exec_res!r}")
        return exec_res


#############################################
# Single Cycle Nodes
#############################################
class SolveCycleNode(Node):
    def prep(self, shared: Dict[str, Any]) -> RunConfig:
        return shared["config"]

    def exec(self, config: RunConfig) -> Tuple[LimitCycle, CycleReport]:
        g = assemble_global(config.params, config.dephase, config.flip_eeq_sign)
        lc = solve_limit_cycle(g, config.samples_per_segment)
        return lc, report_cycle(lc)

    def post(self, shared: Dict[str, Any], prep_res: RunConfig, exec_res: Tuple[LimitCycle, CycleReport]) -> None:
        lc, report = exec_res
        shared["limit_cycle"] = lc
        shared["report"] = report
        print(
            f"tau={report.tau_cycle:.6g}  Q_c/tau={report.cooling_power:.6e}  dS_u={report.entropy_production:.6e}  "
            f"{report.classification}  {report.geometry}  |lambda2|={report.lambda2:.12f}"
        )


class ExportTrajectoryNode(Node):
    def prep(self, shared: Dict[str, Any]) -> Tuple[RunConfig, LimitCycle]:
        return shared["config"], shared["limit_cycle"]

    def exec(self, inputs: Tuple[RunConfig, LimitCycle]) -> Optional[Tuple[str, bool]]:
        config, lc = inputs
        if not config.output_path:
            return None
        return export_trajectory(lc, config.output_path, config.output_format)

    def post(self, shared: Dict[str, Any], prep_res: Any, exec_res: Optional[Tuple[str, bool]]) -> None:
        _record_write(shared, exec_res)


#############################################
# Sweep Nodes
#############################################
class RunSweepNode(Node):
    def prep(self, shared: Dict[str, Any]) -> RunConfig:
        return shared["config"]

    def exec(self, config: RunConfig) -> List[SweepRecord]:
        return run_sweep(config.sweep, config.workers)

    def post(self, shared: Dict[str, Any], prep_res: RunConfig, exec_res: List[SweepRecord]) -> None:
        shared["records"] = exec_res
        failed = sum(1 for r in exec_res if not r.ok)
        logger.info(f"RunSweepNode: {len(exec_res)} cycles solved, {failed} failed")


class RefineTransitionsNode(BatchNode):
    def prep(self, shared: Dict[str, Any]) -> List[Tuple[Any, SweepRecord, SweepRecord]]:
        config: RunConfig = shared["config"]
        records = shared.get("records", [])
        if len(records) < 3:
            logger.warning("RefineTransitionsNode: fewer than 3 grid points, no transition search")
            return []
        return [(config.sweep, lower, upper) for lower, upper in find_brackets(records)]

    def exec(self, item: Tuple[Any, SweepRecord, SweepRecord]) -> Optional[Transition]:
        spec, lower, upper = item
        return refine_transition(spec, lower, upper)

    def exec_fallback(self, prep_res: Tuple[Any, SweepRecord, SweepRecord], exc: Exception) -> Optional[Transition]:
        _, lower, upper = prep_res
        logger.warning(f"could not refine bracket ({lower.tau_cycle}, {upper.tau_cycle}): {exc}")
        return None

    def post(self, shared: Dict[str, Any], prep_res: Any, exec_res_list: List[Optional[Transition]]) -> None:
        config: RunConfig = shared["config"]
        transitions = [t for t in exec_res_list if t is not None]
        report = summarize_transitions(config.sweep, shared.get("records", []), transitions)
        shared["transitions"] = report
        for t in report.transitions:
            print(f"transition {t.from_class} -> {t.to_class} at tau* = {t.tau_star:.6f}")
        for lo, hi in report.short_circuit_windows:
            print(f"short-circuit window ({lo:.6f}, {hi:.6f})")


class ExportSweepNode(Node):
    def prep(self, shared: Dict[str, Any]) -> Tuple[RunConfig, List[SweepRecord], Optional[TransitionReport]]:
        return shared["config"], shared.get("records", []), shared.get("transitions")

    def exec(self, inputs) -> Optional[Tuple[str, bool]]:
        config, records, report = inputs
        if not config.output_path:
            return None
        metadata = {"parameters": config.params.to_dict(), "workers": config.workers, "dephase": config.dephase}
        return export_sweep(records, report, config.output_path, config.output_format, metadata)

    def post(self, shared: Dict[str, Any], prep_res: Any, exec_res: Optional[Tuple[str, bool]]) -> None:
        _record_write(shared, exec_res)


#############################################
# Landmarks Node
#############################################
class LandmarksNode(Node):
    def prep(self, shared: Dict[str, Any]) -> RunConfig:
        return shared["config"]

    def exec(self, config: RunConfig) -> Tuple[TransitionReport, Optional[Tuple[str, bool]]]:
        report = TransitionReport(landmarks=tuple(landmark_times(config.params, config.landmarks)))
        written = None
        if config.output_path:
            written = export_landmarks(report, config.output_path, config.output_format)
        return report, written

    def post(self, shared: Dict[str, Any], prep_res: RunConfig, exec_res) -> None:
        report, written = exec_res
        shared["landmarks"] = report.landmarks
        print(f"{'l':>5} {'tau_adiabat':>14} {'tau_cycle':>14}")
        for m in report.landmarks:
            print(f"{m.l:>5g} {m.tau_adiabat:>14.9f} {m.tau_cycle:>14.9f}")
        _record_write(shared, written)


#############################################
# Validate Node
#############################################
class ValidateNode(BatchNode):
    def prep(self, shared: Dict[str, Any]) -> List[Tuple[str, RunConfig]]:
        return [(name, shared["config"]) for name in VALIDATION_CHECKS]

    def exec(self, item: Tuple[str, RunConfig]) -> CheckResult:
        name, config = item
        return run_check(name, config)

    def exec_fallback(self, prep_res: Tuple[str, RunConfig], exc: Exception) -> CheckResult:
        name, _ = prep_res
        return CheckResult(name, FAIL, f"{type(exc).__name__}: {exc}")

    def post(self, shared: Dict[str, Any], prep_res: Any, exec_res_list: List[CheckResult]) -> None:
        shared["checks"] = exec_res_list
        for result in exec_res_list:
            print(f"{result.status:>4}  {result.name}  {result.detail}")
        failed = [r.name for r in exec_res_list if not r.passed]
        if failed:
            logger.error(f"ValidateNode: failing checks: {', '.join(failed)}")
            shared["exit_code"] = EXIT_VALIDATION


#############################################
# Main Flow
#############################################
def create_main_flow() -> Flow:
    # Create nodes
    dispatch = DispatchNode()
    solve_cycle = SolveCycleNode()
    export_trajectory_node = ExportTrajectoryNode()
    run_sweep_node = RunSweepNode()
    refine = RefineTransitionsNode()
    export_sweep_node = ExportSweepNode()
    landmarks = LandmarksNode()
    validate = ValidateNode()

    # Route on the configured mode
    dispatch - "cycle" >> solve_cycle
    dispatch - "sweep" >> run_sweep_node
    dispatch - "landmarks" >> landmarks
    dispatch - "validate" >> validate

    solve_cycle >> export_trajectory_node
    run_sweep_node >> refine
    refine >> export_sweep_node

    return Flow(start=dispatch)
