# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import logging

from hydra import compose
from hydra.utils import instantiate
from omegaconf import OmegaConf

from cycfold.utils.misc import register_omegaconf_resolvers

DEFAULT_CONFIG = "configs/cycfold_default.yaml"
FOLDR_ONLY_CONFIG = "configs/cycfold_foldr_only.yaml"


def build_engine(
    config_file=DEFAULT_CONFIG,
    hydra_overrides_extra=[],
    **kwargs,
):
    register_omegaconf_resolvers()
    # Read config and init engine
    cfg = compose(config_name=config_file, overrides=hydra_overrides_extra)
    OmegaConf.resolve(cfg)
    engine = instantiate(cfg.engine, _recursive_=True)
    logging.info(f"Built engine from {config_file} with overrides {list(hydra_overrides_extra)}")
    return engine


def engine_overrides(pairs):
    """
    Turn `key=value` pairs from the command line into Hydra overrides on the
    `engine` node, e.g. `rewrite.fuel=500` becomes `++engine.rewrite.fuel=500`.
    """
    overrides = []
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"override {pair!r} is not of the form key=value")
        key, value = pair.split("=", 1)
        overrides.append(f"++engine.{key.strip()}={value.strip()}")
    return overrides
