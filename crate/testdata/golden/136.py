def flip(settings):
    return {value: key for key, value in settings.items()}
