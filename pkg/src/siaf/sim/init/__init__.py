'''Initialize tracing for simulation runs using configuration from SimConfig'''
import traceback
import logging
from typing import Optional

from opentelemetry import trace
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor, ConsoleSpanExporter, SimpleSpanProcessor
from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter as OTLPGrpcSpanExporter
from opentelemetry.exporter.otlp.proto.http.trace_exporter import OTLPSpanExporter as OTLPHttpSpanExporter
from opentelemetry.trace import ProxyTracerProvider
from opentelemetry.sdk.resources import Resource
from siaf.sim import constants
from siaf.sim.config import SimConfig

logger = logging.getLogger(__name__)  # pylint: disable=C0103


class SimInit:
    '''Initialize the OTel components using configuration from SimConfig'''

    def __init__(self, sim_config: SimConfig):
        logger.debug('Initializing SimInit object.')
        self._config = sim_config

    def apply_config(self, sim_config: Optional[SimConfig] = None) -> None:
        """Initialize tracing based on the most recent config"""
        if sim_config:
            self._config = sim_config
        self.init_trace_provider()
        exporter = self._config.tracing_exporter
        if exporter == 'console':
            self.set_console_span_processor()
        elif exporter != 'none':
            self.init_exporter()

    def init_trace_provider(self) -> None:
        '''Initialize trace provider and set resource attributes.'''
        if isinstance(trace.get_tracer_provider(), ProxyTracerProvider):
            logger.debug("no configured trace provider detected, adding one")
            resource_attributes = {
                "service.name": constants.SERVICE_NAME,
                "telemetry.sdk.version": constants.TELEMETRY_SDK_VERSION,
                "telemetry.sdk.name": constants.TELEMETRY_SDK_NAME,
                "telemetry.sdk.language": constants.TELEMETRY_SDK_LANGUAGE
            }
            trace.set_tracer_provider(TracerProvider(resource=Resource.create(resource_attributes)))
        else:
            logger.debug("tracer provider already configured, "
                         "skipping trace provider configuration")

    def init_exporter(self) -> None:
        """Initialize the configured OTLP exporter"""
        exporter = self._init_exporter(self._config.tracing_exporter)
        if exporter is None:
            logger.warning("Unable to initialize exporter")
            return
        self.register_processor(BatchSpanProcessor(exporter))

    def register_processor(self, processor) -> None:
        '''Register additional span exporter + processor'''
        logger.debug('Entering SimInit.register_processor().')
        provider = trace.get_tracer_provider()
        if not hasattr(provider, 'add_span_processor'):
            logger.warning('Tracer provider %s does not accept span processors', type(provider).__name__)
            return
        provider.add_span_processor(processor)

    def set_console_span_processor(self) -> None:
        '''Register the console span processor for debugging purposes.'''
        logger.debug('Entering SimInit.set_console_span_processor().')
        self.register_processor(SimpleSpanProcessor(ConsoleSpanExporter(service_name=constants.SERVICE_NAME)))

    def _init_exporter(self, exporter_type: str):
        endpoint = self._config.tracing_endpoint or None
        try:
            if exporter_type == 'otlp':
                exporter = OTLPGrpcSpanExporter(endpoint=endpoint, insecure=True)
            elif exporter_type == 'otlp_http':
                exporter = OTLPHttpSpanExporter(endpoint=endpoint)
            else:
                logger.error("Unknown exporter type `%s`", exporter_type)
                return None
            logger.info('Initialized %s exporter reporting to `%s`', exporter_type, endpoint)
            return exporter
        except Exception as err:  # pylint: disable=W0703
            logger.error('Failed to initialize %s exporter: exception=%s, stacktrace=%s',
                         exporter_type,
                         err,
                         traceback.format_exc())
            return None
