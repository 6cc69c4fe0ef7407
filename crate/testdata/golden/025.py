def key_list(config):
    return sorted(config.keys())
