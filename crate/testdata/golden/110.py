def blank(values):
    return not values
