"""LangGraph graph assembly: pipeline stages, edges, and the re-imputation loop."""

from langchain_core.runnables import RunnableConfig
from langgraph.graph import END, StateGraph
from langgraph.graph.state import CompiledStateGraph

from imputation import nodes
from imputation.state import ImputationState

# Nodes executed per pass, used to size the recursion limit.
NODES_PER_PASS = 5


def route_after_fill(state: ImputationState, config: RunnableConfig) -> str:
    """Route after the fill node: another pass, or stop."""
    settings = nodes._get_settings(config)
    if state["centered"].fully_observed:
        return "end"
    if state.get("converged", False):
        return "end"
    if state["pass_index"] >= settings.max_passes:
        return "end"
    return "refit"


def build_graph() -> CompiledStateGraph:
    """Assemble and compile the imputation StateGraph."""
    graph = StateGraph(ImputationState)

    # -- Add nodes --
    graph.add_node("prepare", nodes.prepare)
    graph.add_node("covariance", nodes.covariance)
    graph.add_node("select_ranks", nodes.select_ranks)
    graph.add_node("loadings", nodes.loadings)
    graph.add_node("core", nodes.core)
    graph.add_node("fill", nodes.fill)
    graph.add_node("refit", nodes.refit)

    # -- Linear edges --
    graph.add_edge("prepare", "covariance")
    graph.add_edge("covariance", "select_ranks")
    graph.add_edge("select_ranks", "loadings")
    graph.add_edge("loadings", "core")
    graph.add_edge("core", "fill")
    graph.add_edge("refit", "covariance")

    # -- Conditional edges --
    graph.add_conditional_edges("fill", route_after_fill, {"refit": "refit", "end": END})

    graph.set_entry_point("prepare")
    return graph.compile()


def recursion_limit(max_passes: int) -> int:
    return (NODES_PER_PASS + 1) * (max_passes + 1) + 5
