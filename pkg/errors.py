"""
Orchestrator Errors
===================

Exception hierarchy shared by the topology model, the intent pipeline, the
southbound clients and the simulated devices.

Every error carries a ``reason`` equal to its class name so a failed intent
can be reported as ``"<reason>: <message>"``.
"""


class OrchestratorError(Exception):
    """Base class for every error raised by the orchestrator"""

    @property
    def reason(self):
        return type(self).__name__

    def describe(self):
        message = str(self)
        return f"{self.reason}: {message}" if message else self.reason


class ConfigError(OrchestratorError):
    pass


# Topology

class TopologyError(OrchestratorError):
    pass


class ParseError(TopologyError):
    pass


class ValidationError(TopologyError):
    pass


class NotAttached(TopologyError):
    pass


class AmbiguousAttachment(TopologyError):
    pass


class NoPath(TopologyError):
    pass


# Intents

class IntentError(OrchestratorError):
    pass


class UnknownEndpoint(IntentError):
    pass


class InvalidConstraints(IntentError):
    pass


class IllegalTransition(IntentError):
    pass


class UnknownIntent(IntentError):
    pass


# Compiler

class CompileError(OrchestratorError):
    pass


class NoEncryptionCapablePorts(CompileError):
    pass


class UnattachedEndpoint(CompileError):
    pass


# Southbound

class SbiError(OrchestratorError):
    pass


class MalformedBody(SbiError):
    pass


class ControllerUnreachable(SbiError):
    pass


class ControllerRejected(SbiError):
    pass


class AgentUnreachable(SbiError):
    pass


class AgentRejected(SbiError):
    pass


# Simulated devices

class SimRejection(OrchestratorError):
    """A simulated device refused a request; ``status`` is the HTTP code it answers with"""

    status = 422


class RejectUnknownPort(SimRejection):
    status = 404


class RejectNoEncryptionCapablePort(SimRejection):
    pass


class RejectNoPath(SimRejection):
    pass


class DuplicateCall(SimRejection):
    status = 409


class DuplicateTunnel(SimRejection):
    status = 409
