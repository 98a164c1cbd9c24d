"""Main application for Stadia Inspector"""

import reflex as rx

from stadia_inspector.components import left_sidebar, scenario_runner, trace_detail
from stadia_inspector.state import State


def index() -> rx.Component:
    """Main page"""
    return rx.hstack(
        left_sidebar(),
        rx.box(
            rx.vstack(
                trace_detail(),
                scenario_runner(),
                spacing="4",
                width="100%"
            ),
            flex="1",
            padding="20px 20px 5px 20px",
            overflow_y="auto",
            height="100vh"
        ),
        spacing="0",
        width="100%",
        height="100vh",
        align_items="stretch"
    )


app = rx.App()
app.add_page(index, on_load=State.load_data)
