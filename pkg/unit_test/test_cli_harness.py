import io
import json
import math
import tempfile
import unittest
from contextlib import redirect_stdout
from pathlib import Path
from typing import List, Optional, Tuple

from coherent_phase.cli_harness import (
    EXIT_CHECK_FAILED,
    EXIT_INPUT_ERROR,
    EXIT_OK,
    main,
    render,
    run,
)
from coherent_phase.internal.harness.job_spec import JobSpec
from coherent_phase.types import JsonDict

ANCHOR_MATRICES = "[[[[1, 0]]], [[[0, 1]]]]"
FAR_MATRICES = "[[[[10, 0]]], [[[-5, 8.660254037844386]]], [[[-5, -8.660254037844386]]]]"


def run_main(argv: List[str], stdin_text: str = "") -> Tuple[int, JsonDict]:
    output = io.StringIO()
    with redirect_stdout(output):
        exit_code = main(argv, stdin=io.StringIO(stdin_text))
    return exit_code, json.loads(output.getvalue())


class RenderTest(unittest.TestCase):
    def test__render__sorted_keys_and_null_for_non_finite(self) -> None:
        # Act
        result = render({"b": math.nan, "a": [1.5, math.inf]})

        # Assert
        self.assertEqual(result, '{\n  "a": [\n    1.5,\n    null\n  ],\n  "b": null\n}\n')


class SingleComputationTest(unittest.TestCase):
    def test__main__triangle_from_file(self) -> None:
        # Act
        exit_code, document = run_main(
            ["--input", "./unit_test/test_config/job_triangle_anchor.json"]
        )

        # Assert
        self.assertEqual(exit_code, EXIT_OK)
        self.assertTrue(document["passed"])
        self.assertAlmostEqual(document["phase"], math.pi / 4, places=12)
        self.assertAlmostEqual(document["area_closed"], -math.pi / 8, places=12)
        self.assertLess(abs(document["area_quad"] + math.pi / 8), 1e-6)

    def test__main__triangle_from_stdin(self) -> None:
        # Arrange
        text = Path("./unit_test/test_config/job_triangle_anchor.json").read_text("utf-8")

        # Act
        exit_code, document = run_main(["--input", "-"], stdin_text=text)

        # Assert
        self.assertEqual(exit_code, EXIT_OK)
        self.assertAlmostEqual(document["psi_abs"], math.sqrt(2) / 4, places=12)

    def test__main__overlap_from_flags(self) -> None:
        # Act
        exit_code, document = run_main(["overlap", "--matrices", ANCHOR_MATRICES])

        # Assert
        self.assertEqual(exit_code, EXIT_OK)
        self.assertEqual(document["kernel"], [1.0, 1.0])
        self.assertAlmostEqual(document["normalized_overlap"][0], 0.5)
        self.assertAlmostEqual(document["normalized_overlap"][1], -0.5)

    def test__main__distance(self) -> None:
        # Act
        exit_code, document = run_main(["distance", "--matrices", "[[[[0, 0]]], [[[1, 0]]]]"])

        # Assert
        self.assertEqual(exit_code, EXIT_OK)
        self.assertAlmostEqual(document["distance"], math.pi / 4)

    def test__main__area_closed(self) -> None:
        # Act
        exit_code, document = run_main(["area-closed", "--matrices", ANCHOR_MATRICES])

        # Assert
        self.assertEqual(exit_code, EXIT_OK)
        self.assertAlmostEqual(document["area_closed"], -math.pi / 8, places=12)
        self.assertAlmostEqual(document["phase_closed"], 7 * math.pi / 4, places=12)

    def test__main__area_quad_with_implied_origin(self) -> None:
        # Act
        exit_code, document = run_main(
            ["area-quad", "--matrices", ANCHOR_MATRICES, "--quad-order", "24"]
        )

        # Assert
        self.assertEqual(exit_code, EXIT_OK)
        self.assertLess(abs(document["area_quad"] + math.pi / 8), 1e-6)
        self.assertLess(abs(document["phase_from_area"] - math.pi / 4), 1e-6)

    def test__main__loop(self) -> None:
        # Act
        exit_code, document = run_main(["loop", "--matrices", ANCHOR_MATRICES])

        # Assert
        self.assertEqual(exit_code, EXIT_OK)
        self.assertLess(abs(document["loop_berry"] + math.pi / 4), 1e-6)
        self.assertTrue(document["passed"])

    def test__main__embed(self) -> None:
        # Act
        exit_code, document = run_main(["embed", "--matrices", "[[[[0.5, -2]]]]"])

        # Assert
        self.assertEqual(exit_code, EXIT_OK)
        self.assertEqual(document["homo"], [[1.0, 0.0], [0.5, -2.0]])

    def test__main__geodesic_from_origin(self) -> None:
        # Act
        exit_code, document = run_main(
            ["geodesic", "--matrices", "[[[[1, 0], [0, 0.5]]]]", "--points", "3"]
        )

        # Assert
        self.assertEqual(exit_code, EXIT_OK)
        self.assertEqual([sample["t"] for sample in document["samples"]], [0.0, 0.5, 1.0])
        self.assertAlmostEqual(document["samples"][0]["z"][0][0][0], 0.0)
        self.assertAlmostEqual(document["samples"][2]["z"][0][0][0], 1.0)
        self.assertEqual(len(document["principal_angles"]), 1)

    def test__main__sphere_check(self) -> None:
        # Act
        exit_code, document = run_main(["sphere-check", "--matrices", ANCHOR_MATRICES])

        # Assert
        self.assertEqual(exit_code, EXIT_OK)
        self.assertTrue(document["passed"])
        self.assertAlmostEqual(document["half_solid_angle"], math.pi / 4, places=8)


class InputErrorTest(unittest.TestCase):
    def test__main__mismatched_shapes(self) -> None:
        # Act
        exit_code, document = run_main(
            ["--input", "./unit_test/test_config/job_overlap_mismatched_shapes.json"]
        )

        # Assert
        self.assertEqual(exit_code, EXIT_INPUT_ERROR)
        self.assertEqual(document["error"], "JobSpecException")

    def test__main__malformed_json(self) -> None:
        # Act
        exit_code, document = run_main(["--input", "./unit_test/test_config/job_malformed.json"])

        # Assert
        self.assertEqual(exit_code, EXIT_INPUT_ERROR)
        self.assertIn("line 4 column 1", document["message"])

    def test__main__missing_input_file(self) -> None:
        # Act
        exit_code, document = run_main(["--input", "./unit_test/test_config/absent.json"])

        # Assert
        self.assertEqual(exit_code, EXIT_INPUT_ERROR)
        self.assertEqual(document["error"], "FileNotFoundError")

    def test__main__unknown_command(self) -> None:
        # Act / Assert
        with self.assertRaises(SystemExit) as context, redirect_stdout(io.StringIO()):
            main(["rotate"])
        self.assertEqual(context.exception.code, 2)

    def test__run__orthogonal_states_is_numerical_failure(self) -> None:
        # Arrange
        job = JobSpec.from_json_config(
            {"command": "area-closed", "matrices": [[[[1, 0]]], [[[-1, 0]]]]}
        )

        # Act
        outcome = run(job)

        # Assert
        self.assertEqual(outcome.exit_code, EXIT_CHECK_FAILED)
        self.assertEqual(outcome.document["error"], "UndefinedPhaseError")
        self.assertNotIn("seed", outcome.document)

    def test__main__loop_around_chart_infinity_fails(self) -> None:
        # Act
        exit_code, document = run_main(["loop", "--matrices", FAR_MATRICES])

        # Assert
        self.assertEqual(exit_code, EXIT_CHECK_FAILED)
        self.assertEqual(document["error"], "ChartExitError")

    def test__main__triangle_around_chart_infinity_fails(self) -> None:
        # Act
        exit_code, document = run_main(["triangle", "--matrices", FAR_MATRICES])

        # Assert
        self.assertEqual(exit_code, EXIT_CHECK_FAILED)
        self.assertEqual(document["error"], "ChartExitError")


class VerifyCommandTest(unittest.TestCase):
    def run_verify(self, extra: List[str]) -> Tuple[int, JsonDict, Optional[str]]:
        with tempfile.TemporaryDirectory() as directory:
            report_path = Path(directory) / "report.json"
            exit_code, document = run_main(
                ["--input", "./unit_test/test_config/job_verify_kernel.json", "--report"]
                + [str(report_path)]
                + extra
            )
            report_text = report_path.read_text("utf-8") if report_path.exists() else None
        return exit_code, document, report_text

    def test__main__verify_writes_report_without_timing(self) -> None:
        # Act
        exit_code, document, report_text = self.run_verify([])

        # Assert
        self.assertEqual(exit_code, EXIT_OK)
        self.assertTrue(document["passed"])
        self.assertEqual(document["trials"], 4)
        self.assertNotIn("wall_time_ms", document)
        assert report_text is not None
        self.assertEqual(json.loads(report_text), document)
        self.assertTrue(report_text.endswith("}\n"))

    def test__main__verify_timing_only_on_stdout(self) -> None:
        # Act
        exit_code, document, report_text = self.run_verify(["--timing"])

        # Assert
        self.assertEqual(exit_code, EXIT_OK)
        self.assertIn("wall_time_ms", document)
        assert report_text is not None
        self.assertNotIn("wall_time_ms", report_text)

    def test__main__verify_is_deterministic(self) -> None:
        # Act
        first = self.run_verify([])[2]
        second = self.run_verify([])[2]

        # Assert
        self.assertEqual(first, second)
