class Meta(type):
    def __new__(mcs, name, bases, ns):
        return type.__new__(mcs, name, bases, ns)
