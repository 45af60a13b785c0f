"""Content-oriented pub/sub over NDN-style forwarding tables, plus a
deterministic simulator for comparing it with polling in sleepy IoT networks."""

from .codec import Data, Interest, Publish, Subscribe, Unsubscribe, decode, encode
from .naming import Name, parse_name
from .simnet import Scenario, Trace, run

__version__ = "0.1.0"
