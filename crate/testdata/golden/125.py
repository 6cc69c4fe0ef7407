def join_underscore(message):
    return '_'.join(message.split(' '))
