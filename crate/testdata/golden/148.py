def has_nothing(values):
    return not values
