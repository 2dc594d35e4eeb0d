from dataclasses import dataclass, field


@dataclass
class Item:
    name: str
    price: float
    quantity: int = 0
    tags: list = field(default_factory=list)

    def total_value(self):
        return self.price * self.quantity


class Inventory:
    def __init__(self):
        self.items = {}

    def add(self, item):
        if item.name in self.items:
            self.items[item.name].quantity += item.quantity
        else:
            self.items[item.name] = item

    def remove(self, name, quantity):
        item = self.items.get(name)
        if item is None:
            raise KeyError(name)
        if item.quantity < quantity:
            raise ValueError("not enough stock")
        item.quantity -= quantity
        if item.quantity == 0:
            del self.items[name]

    def total_value(self):
        return sum(item.total_value() for item in self.items.values())

    def find_by_tag(self, tag):
        return [item for item in self.items.values() if tag in item.tags]

    def cheapest(self):
        if not self.items:
            return None
        return min(self.items.values(), key=lambda item: item.price)

    def restock(self, threshold, amount):
        restocked = []
        for item in self.items.values():
            if item.quantity < threshold:
                item.quantity += amount
                restocked.append(item.name)
        return restocked


def load_inventory(rows):
    inventory = Inventory()
    for row in rows:
        name, price, quantity = row
        inventory.add(Item(name, float(price), int(quantity)))
    return inventory
