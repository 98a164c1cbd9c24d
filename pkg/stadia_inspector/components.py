"""UI components for the Stadia Inspector"""

from typing import List

import reflex as rx

from stadia_inspector.config import COLORS, GAMES, PROTOCOLS
from stadia_inspector.state import State, TraceSummary


def trace_card(trace: TraceSummary) -> rx.Component:
    """Render a trace summary card"""
    return rx.card(
        rx.vstack(
            rx.heading(trace.label, size="4"),
            rx.text(trace.trace_id, size="1", color="gray"),
            rx.hstack(
                rx.badge(trace.dataset_id, color_scheme="blue"),
                rx.badge(trace.resolution, color_scheme="purple"),
            ),
            rx.hstack(
                rx.badge(f"{trace.packet_count} packets", color_scheme="green"),
                rx.badge(f"{trace.duration} s", color_scheme="orange"),
            ),
            align_items="start",
            spacing="2",
            width="100%"
        ),
        width="100%",
        on_click=lambda: State.select_trace(trace.trace_id),
        style=rx.cond(
            State.selected_trace_id == trace.trace_id,
            {"background_color": COLORS['selected_trace_bg'], "cursor": "pointer",
             "border": f"2px solid {COLORS['selected_trace_border']}"},
            {"cursor": "pointer", "border": "2px solid transparent"}
        )
    )


def styled_panel(badge_text: str, badge_color: str, content: rx.Component,
                 background_color: str, border_color: str) -> rx.Component:
    """A badge-headed box used for the stats and summary panels"""
    return rx.box(
        rx.vstack(
            rx.badge(badge_text, color_scheme=badge_color, size="2"),
            content,
            spacing="2",
            align_items="start",
            width="100%"
        ),
        padding="12px",
        border_radius="6px",
        background_color=background_color,
        border=f"1px solid {border_color}",
        width="100%"
    )


def key_value_rows(values) -> rx.Component:
    return rx.vstack(
        rx.foreach(
            values,
            lambda item: rx.hstack(
                rx.text(item[0], weight="bold", size="2", min_width="140px"),
                rx.text(item[1], size="2", font_family="monospace"),
            )
        ),
        spacing="1",
        align_items="start"
    )


def line_chart(data_key: str, color: str, y_label: str, step: bool = False) -> rx.Component:
    """Single-series chart over the per-second report"""
    return rx.recharts.line_chart(
        rx.recharts.line(data_key=data_key, stroke=color, dot=False,
                         type_="stepAfter" if step else "monotone"),
        rx.recharts.x_axis(data_key="t"),
        rx.recharts.y_axis(label={"value": y_label, "angle": -90, "position": "insideLeft"}),
        rx.recharts.cartesian_grid(stroke_dasharray="3 3"),
        rx.recharts.graphing_tooltip(),
        data=State.report_chart_data,
        width="100%",
        height=180
    )


def trace_detail() -> rx.Component:
    """Stats and load chart of the selected trace"""
    return rx.cond(
        State.selected_trace_id,
        rx.vstack(
            rx.hstack(
                rx.heading("Trace", size="5"),
                rx.spacer(),
                rx.button("Close", on_click=State.clear_selection, size="2", variant="soft", color_scheme="gray"),
                width="100%"
            ),
            styled_panel("Traffic statistics", "blue", key_value_rows(State.selected_stats),
                         COLORS['stats_bg'], COLORS['stats_border']),
            rx.heading("Load per second (Mbit/s)", size="3"),
            rx.recharts.line_chart(
                rx.recharts.line(data_key="load", stroke=COLORS['load_line'], dot=False),
                rx.recharts.x_axis(data_key="t"),
                rx.recharts.y_axis(),
                rx.recharts.cartesian_grid(stroke_dasharray="3 3"),
                rx.recharts.graphing_tooltip(),
                data=State.load_chart_data,
                width="100%",
                height=240
            ),
            spacing="3",
            align_items="start",
            width="100%"
        ),
        rx.vstack(
            rx.heading("No Trace Selected", size="6", color="gray"),
            rx.text("Select a trace from the list to view its statistics", size="3", color="gray"),
            spacing="3",
            align_items="center",
            justify_content="center",
            height="240px"
        )
    )


def number_input(label: str, field_name: str, value, width: str = "80px") -> rx.Component:
    return rx.hstack(
        rx.text(label, weight="bold", size="2", min_width="70px"),
        rx.input(
            type="number",
            value=value,
            on_change=lambda v: State.set_scenario_number(field_name, v),
            width=width
        ),
        spacing="2",
        align_items="center"
    )


def scenario_runner() -> rx.Component:
    """Form for a drop/raise scenario and the charts of its report"""
    return rx.vstack(
        rx.divider(),
        rx.heading("Scenario", size="5"),
        rx.hstack(
            rx.select(list(GAMES), value=State.scenario_game, on_change=State.set_scenario_game),
            rx.select(["drop", "raise"], value=State.scenario_kind, on_change=State.set_scenario_kind),
            rx.select(["720p", "1080p", "4K"], value=State.scenario_max_resolution,
                      on_change=State.set_scenario_max_resolution),
            number_input("Limit", "scenario_limit", State.scenario_limit),
            number_input("At (s)", "scenario_at", State.scenario_at),
            number_input("Length", "scenario_duration", State.scenario_duration),
            number_input("Seed", "scenario_seed", State.scenario_seed, width="60px"),
            rx.button("Run", on_click=State.run_scenario, size="2", color_scheme="green"),
            spacing="3",
            align_items="center",
            flex_wrap="wrap"
        ),
        rx.cond(
            State.scenario_error,
            rx.text(State.scenario_error, color="red", size="2"),
            rx.box()
        ),
        rx.cond(
            State.report_ready,
            rx.cond(
                State.report_refused,
                styled_panel("Session refused", "red",
                             rx.text("The starting capacity cannot carry any configuration", size="2"),
                             COLORS['refused_bg'], COLORS['refused_border']),
                rx.vstack(
                    rx.text(f"Report from {State.report_time}", size="1", color="gray"),
                    styled_panel("Summary", "blue", key_value_rows(State.report_summary),
                                 COLORS['stats_bg'], COLORS['stats_border']),
                    rx.text("Frame height (px)", size="2", weight="bold"),
                    line_chart("height", COLORS['resolution_line'], "px", step=True),
                    rx.text("Decoded frames per second", size="2", weight="bold"),
                    line_chart("fps", COLORS['fps_line'], "fps"),
                    rx.text("RTT (ms)", size="2", weight="bold"),
                    line_chart("rtt_ms", COLORS['rtt_line'], "ms"),
                    rx.text("Delivered load (Mbit/s)", size="2", weight="bold"),
                    line_chart("load", COLORS['load_line'], "Mbit/s"),
                    rx.text("Packets lost", size="2", weight="bold"),
                    rx.recharts.bar_chart(
                        rx.recharts.bar(data_key="lost", fill=COLORS['loss_bar']),
                        rx.recharts.x_axis(data_key="t"),
                        rx.recharts.y_axis(),
                        data=State.report_chart_data,
                        width="100%",
                        height=160
                    ),
                    spacing="2",
                    align_items="start",
                    width="100%"
                )
            ),
            rx.box()
        ),
        spacing="3",
        align_items="start",
        width="100%"
    )


def filter_select(label: str, options: List[str], value, on_change) -> rx.Component:
    return rx.hstack(
        rx.text(label, weight="bold", size="2", min_width="70px"),
        rx.select(["all"] + options, value=rx.cond(value, value, "all"), on_change=on_change, flex="1"),
        spacing="2",
        align_items="center",
        width="100%"
    )


def left_sidebar() -> rx.Component:
    """Render the left sidebar with filters and trace list"""
    return rx.vstack(
        rx.heading("Stadia Inspector", size="7", font_style="italic"),
        rx.cond(
            State.load_error,
            rx.text(State.load_error, color="red", size="2"),
            rx.box()
        ),
        rx.vstack(
            rx.hstack(
                rx.button(
                    rx.cond(
                        State.filters_expanded,
                        f"Hide Filters ({State.active_filter_count})",
                        f"Show Filters ({State.active_filter_count})"
                    ),
                    on_click=State.toggle_filters,
                    size="2",
                    flex="1"
                ),
                rx.button("Reset", on_click=State.reset_filters, size="2", variant="soft", color_scheme="gray"),
                spacing="2",
                width="100%"
            ),
            rx.cond(
                State.filters_expanded,
                rx.vstack(
                    filter_select("Game", list(GAMES), State.game_filter, State.set_game_filter),
                    filter_select("Protocol", list(PROTOCOLS), State.protocol_filter, State.set_protocol_filter),
                    filter_select("Direction", ["downlink", "uplink"], State.direction_filter,
                                  State.set_direction_filter),
                    rx.hstack(
                        rx.text("Length", weight="bold", size="2", min_width="70px"),
                        rx.input(
                            placeholder="Min s",
                            type="number",
                            value=State.min_duration,
                            on_change=lambda v: State.set_numeric_filter("min_duration", v),
                            width="80px"
                        ),
                        rx.text("to", size="1"),
                        rx.input(
                            placeholder="Max s",
                            type="number",
                            value=State.max_duration,
                            on_change=lambda v: State.set_numeric_filter("max_duration", v),
                            width="80px"
                        ),
                        spacing="2",
                        align_items="center",
                        width="100%"
                    ),
                    spacing="2",
                    align_items="start",
                    padding="10px",
                    background_color="rgba(0,0,0,0.02)",
                    border_radius="8px",
                    width="100%"
                ),
                rx.box()
            ),
            spacing="2",
            width="100%"
        ),
        rx.box(
            rx.foreach(State.filtered_traces, trace_card),
            width="100%",
            max_height=rx.cond(State.filters_expanded, "calc(100vh - 360px)", "calc(100vh - 200px)"),
            overflow_y="auto",
            padding="5px"
        ),
        spacing="3",
        align_items="start",
        width="400px",
        height="100vh",
        padding="20px 20px 5px 20px",
        overflow_y="auto"
    )
