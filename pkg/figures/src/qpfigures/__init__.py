"""Figure rendering for qpjensen CSV/JSON outputs."""

__version__ = "0.1.0"

from .render import RenderError, render_profile, render_winding

__all__ = ["RenderError", "render_profile", "render_winding"]
