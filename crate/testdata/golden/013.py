def flip(settings):
    result = {}
    for key, value in settings.items():
        result[value] = key
    return result
