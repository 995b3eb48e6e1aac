"""pocketsim: software twin of a tactile rhythm-game pocket robot.

Subsystems: the game engine (`game`), capacitive touch pipeline (`touch`),
wire framing (`wire`), store-and-forward relay (`relay`), event store
(`store`), ingestion server (`server`), scenario simulator (`simulate`) and
report tooling (`analysis`).
"""

__version__ = "0.1.0"
