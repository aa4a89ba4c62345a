"""Cutoff synthesis and verification for parameterized distributed protocols."""

from .analysis import AnalysisResult, Invocation, actions_that_set, analyze, guards_for, pattern_match, static_analysis
from .frontend import ParseError, ProtocolAST, load_protocol, parse_protocol, preprocess
from .pipeline import Config, RunReport, bench, fuzz_conformance, verify
from .semantics import Instance
from .synthesis import SynthesisResult, synthesize, synthesize_file

__version__ = "0.1.0"

__all__ = [
    "AnalysisResult", "Config", "Instance", "Invocation", "ParseError", "ProtocolAST", "RunReport",
    "SynthesisResult", "actions_that_set", "analyze", "bench", "fuzz_conformance", "guards_for",
    "load_protocol", "parse_protocol", "pattern_match", "preprocess", "static_analysis", "synthesize",
    "synthesize_file", "verify",
]
