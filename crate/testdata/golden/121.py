def swap(config):
    return {value: key for key, value in config.items()}
