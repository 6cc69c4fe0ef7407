class Point:
    __slots__ = ('x', 'y')

    def __repr__(self):
        return f"Point({self.x}, {self.y})"
