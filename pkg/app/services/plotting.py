"""
Plot-script generation for Triwell.
"""
import logging
from pathlib import Path
from typing import Optional, Union

from app.errors import MissingOutputError
from app.plots.templates import FIGURES

logger = logging.getLogger(__name__)


def emit_plot_scripts(output_dir: Union[str, Path], figures: Optional[list[str]] = None) -> list[Path]:
    """
    Write one gnuplot script per figure whose CSV is in `output_dir`.

    With `figures`, every named figure must have its CSV. Without it, at
    least one figure CSV must be present.
    """
    output_dir = Path(output_dir)
    names = figures if figures is not None else list(FIGURES)

    missing = [FIGURES[name][0] for name in names if not (output_dir / FIGURES[name][0]).is_file()]
    if figures is not None and missing:
        raise MissingOutputError(f"cannot plot: missing {', '.join(missing)} in {output_dir}")
    if len(missing) == len(names):
        raise MissingOutputError(f"no figure CSV in {output_dir}; expected one of {', '.join(missing)}")

    scripts = []
    for name in names:
        csv_name, template = FIGURES[name]
        if csv_name in missing:
            continue
        script = output_dir / f"{name}.gp"
        script.write_text(template.format(csv=csv_name, output=f"{name}.png"), encoding="utf-8")
        scripts.append(script)
        logger.info(f"Wrote plot script {script}")
    return scripts
